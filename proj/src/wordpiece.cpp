#include "relforge/wordpiece.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "relforge/chars.hpp"
#include "relforge/errors.hpp"
#include "relforge/tsv.hpp"

namespace relforge::wordpiece {

Vocab::Vocab(std::vector<std::string> tokens) : token_of_(std::move(tokens)) {
  id_of_.reserve(token_of_.size());
  for (std::size_t i = 0; i < token_of_.size(); ++i) {
    const auto& tok = token_of_[i];
    if (tok.empty())
      throw DataError("vocab: empty token at line " + std::to_string(i + 1));
    auto [it, inserted] = id_of_.emplace(tok, static_cast<int>(i));
    if (!inserted)
      throw DataError("vocab: duplicate token '" + tok + "' at line " +
                      std::to_string(i + 1) + " (first at line " +
                      std::to_string(it->second + 1) + ")");
  }
  auto require = [&](std::string_view name) {
    auto it = id_of_.find(std::string(name));
    if (it == id_of_.end())
      throw DataError("vocab: missing special token " + std::string(name));
    return it->second;
  };
  pad_id_ = require(kPad);
  unk_id_ = require(kUnk);
  cls_id_ = require(kCls);
  sep_id_ = require(kSep);
}

int Vocab::id_of(const std::string& token) const {
  auto it = id_of_.find(token);
  return it == id_of_.end() ? -1 : it->second;
}

const std::string& Vocab::token_of(int id) const {
  if (id < 0 || id >= size())
    throw ContractError("vocab: id out of range: " + std::to_string(id));
  return token_of_[static_cast<std::size_t>(id)];
}

Vocab load_vocab(const std::filesystem::path& path) {
  return Vocab(tsv::read_lines(path));
}

namespace {

// Whitespace splits; punctuation becomes a standalone word.
std::vector<std::string> pre_split(std::string_view text, bool lowercase) {
  std::vector<std::string> words;
  std::string cur;
  std::size_t i = 0;
  while (i < text.size()) {
    auto d = chars::decode_utf8(text, i);
    auto kind = chars::classify(d.cp, d.valid);
    if (kind == chars::Kind::Letter) {
      for (int k = 0; k < d.len; ++k) {
        char c = text[i + k];
        cur.push_back(lowercase ? chars::to_lower_ascii(c) : c);
      }
    } else {
      if (!cur.empty()) {
        words.push_back(std::move(cur));
        cur.clear();
      }
      if (kind == chars::Kind::Punct)
        words.emplace_back(text.substr(i, static_cast<std::size_t>(d.len)));
    }
    i += static_cast<std::size_t>(d.len);
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

// Greedy longest-match-first over codepoint boundaries.
void append_pieces(const std::string& word, const Vocab& vocab,
                   std::size_t max_word_bytes, std::vector<std::string>& out) {
  if (word.size() > max_word_bytes) {
    out.emplace_back(kUnk);
    return;
  }
  std::vector<std::size_t> bounds;  // codepoint start offsets + end
  for (std::size_t i = 0; i < word.size();)
    bounds.push_back(i), i += static_cast<std::size_t>(chars::decode_utf8(word, i).len);
  bounds.push_back(word.size());

  std::vector<std::string> pieces;
  std::size_t start = 0;  // index into bounds
  while (start + 1 < bounds.size()) {
    std::size_t end = bounds.size() - 1;
    std::string match;
    while (end > start) {
      std::string sub = word.substr(bounds[start], bounds[end] - bounds[start]);
      if (start > 0) sub = "##" + sub;
      if (vocab.id_of(sub) >= 0) {
        match = std::move(sub);
        break;
      }
      --end;
    }
    if (match.empty()) {
      out.emplace_back(kUnk);
      return;
    }
    pieces.push_back(std::move(match));
    start = end;
  }
  for (auto& p : pieces) out.push_back(std::move(p));
}

}  // namespace

std::vector<std::string> wordpiece_tokenize(std::string_view text,
                                            const Vocab& vocab,
                                            const TokenizerOptions& opt) {
  std::vector<std::string> out;
  for (const auto& word : pre_split(text, opt.lowercase))
    append_pieces(word, vocab, opt.max_word_bytes, out);
  return out;
}

std::string compose_answer(const std::string& title,
                           std::optional<double> price,
                           const std::optional<std::string>& breadcrumb) {
  if (title.empty()) throw ContractError("compose_answer: empty title");
  std::string out = title;
  if (price) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *price);
    out += '|';
    out += buf;
  }
  if (breadcrumb) {
    out += '|';
    out += *breadcrumb;
  }
  return out;
}

EncodedSequence encode_pair(std::string_view query, std::string_view answer,
                            const Vocab& vocab, int max_seq_len,
                            const TokenizerOptions& opt) {
  if (max_seq_len < 5)
    throw ContractError("encode_pair: max_seq_len must be >= 5, got " +
                        std::to_string(max_seq_len));
  std::vector<std::string> q = wordpiece_tokenize(query, vocab, opt);
  std::vector<std::string> a = wordpiece_tokenize(answer, vocab, opt);

  const std::size_t budget = static_cast<std::size_t>(max_seq_len) - 3;
  while (q.size() + a.size() > budget) {
    if (q.size() > a.size())
      q.pop_back();
    else
      a.pop_back();  // ties trim the answer
  }

  EncodedSequence seq;
  seq.max_seq_len = max_seq_len;
  seq.ids.reserve(static_cast<std::size_t>(max_seq_len));
  seq.ids.push_back(vocab.cls_id());
  for (const auto& t : q) seq.ids.push_back(vocab.id_of(t));
  seq.ids.push_back(vocab.sep_id());
  const std::size_t seg_flip = seq.ids.size();
  for (const auto& t : a) seq.ids.push_back(vocab.id_of(t));
  seq.ids.push_back(vocab.sep_id());

  const std::size_t used = seq.ids.size();
  seq.mask.assign(used, 1);
  seq.segments.assign(used, 0);
  for (std::size_t i = seg_flip; i < used; ++i) seq.segments[i] = 1;

  seq.ids.resize(static_cast<std::size_t>(max_seq_len), vocab.pad_id());
  seq.mask.resize(static_cast<std::size_t>(max_seq_len), 0);
  seq.segments.resize(static_cast<std::size_t>(max_seq_len), 0);
  return seq;
}

bool EncodedSequence::valid(const Vocab& vocab, std::string* why) const {
  auto fail = [&](const char* msg) {
    if (why) *why = msg;
    return false;
  };
  const auto n = static_cast<std::size_t>(max_seq_len);
  if (max_seq_len <= 0 || ids.size() != n || mask.size() != n ||
      segments.size() != n)
    return fail("lengths differ from max_seq_len");
  if (ids[0] != vocab.cls_id()) return fail("ids[0] is not [CLS]");

  std::size_t masked = 0;
  bool in_padding = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] != 0 && mask[i] != 1) return fail("mask not 0/1");
    if (segments[i] != 0 && segments[i] != 1) return fail("segments not 0/1");
    if (mask[i] == 1) {
      if (in_padding) return fail("mask not monotone non-increasing");
      ++masked;
    } else {
      in_padding = true;
      if (ids[i] != vocab.pad_id()) return fail("padding id is not [PAD]");
      if (segments[i] != 0) return fail("padding segment is not 0");
    }
  }

  std::vector<std::size_t> seps;
  for (std::size_t i = 0; i < masked; ++i)
    if (ids[i] == vocab.sep_id()) seps.push_back(i);
  if (seps.size() != 2) return fail("expected exactly two masked [SEP]");
  if (seps[1] != masked - 1) return fail("second [SEP] must end the masked region");
  for (std::size_t i = 0; i < masked; ++i)
    if (segments[i] != (i > seps[0] ? 1 : 0))
      return fail("segments must flip right after the first [SEP]");
  return true;
}

void encode_stream(std::istream& in, std::ostream& out, const Vocab& vocab,
                   int max_seq_len, const TokenizerOptions& opt) {
  auto csv = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(v[i]);
    }
    return s;
  };
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto pos = line.find('\t');
    if (pos == std::string::npos)
      throw DataError("encode input line " + std::to_string(lineno) +
                      ": expected query<TAB>answer");
    EncodedSequence seq = encode_pair(std::string_view(line).substr(0, pos),
                                      std::string_view(line).substr(pos + 1),
                                      vocab, max_seq_len, opt);
    out << csv(seq.ids) << '\t' << csv(seq.mask) << '\t' << csv(seq.segments)
        << '\n';
  }
}

}  // namespace relforge::wordpiece
