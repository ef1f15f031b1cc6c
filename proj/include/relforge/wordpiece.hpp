#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace relforge::wordpiece {

inline constexpr std::string_view kPad = "[PAD]";
inline constexpr std::string_view kUnk = "[UNK]";
inline constexpr std::string_view kCls = "[CLS]";
inline constexpr std::string_view kSep = "[SEP]";

// Token ids are dense 0..N-1 and equal to the vocab-file line numbers.
class Vocab {
 public:
  explicit Vocab(std::vector<std::string> tokens);

  int id_of(const std::string& token) const;  // -1 when absent
  const std::string& token_of(int id) const;
  int size() const { return static_cast<int>(token_of_.size()); }

  int pad_id() const { return pad_id_; }
  int unk_id() const { return unk_id_; }
  int cls_id() const { return cls_id_; }
  int sep_id() const { return sep_id_; }

  const std::vector<std::string>& tokens() const { return token_of_; }

 private:
  std::unordered_map<std::string, int> id_of_;
  std::vector<std::string> token_of_;
  int pad_id_, unk_id_, cls_id_, sep_id_;
};

Vocab load_vocab(const std::filesystem::path& path);

struct TokenizerOptions {
  bool lowercase = true;          // ASCII lowercasing; accents kept
  std::size_t max_word_bytes = 200;  // longer words map straight to [UNK]
};

// Whitespace/punctuation pre-split (punctuation becomes its own token),
// then greedy longest-match-first decomposition against the vocab with
// "##" continuation pieces. Undecomposable words become [UNK].
std::vector<std::string> wordpiece_tokenize(std::string_view text,
                                            const Vocab& vocab,
                                            const TokenizerOptions& opt = {});

// title|price|breadcrumb with absent fields skipped; price uses two
// decimal places.
std::string compose_answer(const std::string& title,
                           std::optional<double> price,
                           const std::optional<std::string>& breadcrumb);

struct EncodedSequence {
  std::vector<int> ids;       // length max_seq_len
  std::vector<int> mask;      // 1s then 0s
  std::vector<int> segments;  // 0 through first [SEP], 1 through second
  int max_seq_len = 0;

  // True when every structural invariant holds for `vocab`.
  bool valid(const Vocab& vocab, std::string* why = nullptr) const;
};

// [CLS] q1..qm [SEP] a1..an [SEP] [PAD]...; over-budget inputs are trimmed
// one token at a time from the tail of the currently-longer side, ties
// trimming the answer.
EncodedSequence encode_pair(std::string_view query, std::string_view answer,
                            const Vocab& vocab, int max_seq_len,
                            const TokenizerOptions& opt = {});

// stdin/stdout streaming mode: `query<TAB>answer` lines in,
// `ids(csv)<TAB>mask(csv)<TAB>segments(csv)` lines out.
void encode_stream(std::istream& in, std::ostream& out, const Vocab& vocab,
                   int max_seq_len, const TokenizerOptions& opt = {});

}  // namespace relforge::wordpiece
