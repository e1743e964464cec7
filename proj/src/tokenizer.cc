// Copyright 2026 The SepsLab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sepslab/tokenizer.h"

#include <algorithm>
#include <map>
#include <set>

#include "sepslab/errors.h"

namespace sepslab {
namespace {

bool IsLetter(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool IsDigit(unsigned char c) { return c >= '0' && c <= '9'; }

// Length of the word/digit run or single character starting at `pos`.
size_t UnitLength(std::string_view text, size_t pos) {
  const unsigned char c = text[pos];
  size_t end = pos + 1;
  if (IsLetter(c)) {
    while (end < text.size() && IsLetter(text[end])) ++end;
  } else if (IsDigit(c)) {
    while (end < text.size() && IsDigit(text[end])) ++end;
  }
  return end - pos;
}

}  // namespace

Tokenizer Tokenizer::Build(const std::vector<std::string>& texts,
                           const ChatTemplate& chat, int min_count) {
  Tokenizer t;
  t.pieces_ = {chat.instruction_start, chat.instruction_end,
               chat.end_of_sequence};
  t.Index();

  std::set<unsigned char> alphabet;
  for (int c = 0x20; c < 0x7f; ++c)
    alphabet.insert(static_cast<unsigned char>(c));
  alphabet.insert('\n');
  std::map<std::string, int> counts;
  for (const auto& text : texts) {
    for (unsigned char c : text) alphabet.insert(c);
    for (std::string_view piece : t.PreTokenize(text)) {
      if (t.lookup_.contains(std::string(piece))) continue;
      ++counts[std::string(piece)];
    }
  }
  for (unsigned char c : alphabet)
    t.pieces_.emplace_back(1, static_cast<char>(c));

  std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
  std::stable_sort(
      ranked.begin(), ranked.end(),
      [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [piece, count] : ranked) {
    if (count < min_count) break;
    if (piece.size() == 1) continue;  // already a character token
    t.pieces_.push_back(piece);
  }
  t.Index();
  return t;
}

Tokenizer Tokenizer::FromPieces(std::vector<std::string> pieces) {
  if (pieces.size() < kNumSpecial) {
    throw CodecError("piece table is missing the chat special tokens");
  }
  Tokenizer t;
  t.pieces_ = std::move(pieces);
  t.Index();
  return t;
}

void Tokenizer::Index() {
  lookup_.clear();
  std::fill(char_ids_.begin(), char_ids_.end(), -1);
  for (int id = 0; id < static_cast<int>(pieces_.size()); ++id) {
    const auto [it, inserted] = lookup_.emplace(pieces_[id], id);
    if (!inserted) throw CodecError("duplicate piece in table: " + pieces_[id]);
    if (id >= kNumSpecial && pieces_[id].size() == 1) {
      char_ids_[static_cast<unsigned char>(pieces_[id][0])] = id;
    }
  }
}

ChatTemplate Tokenizer::chat_template() const {
  return {pieces_[kInstructionStartId], pieces_[kInstructionEndId],
          pieces_[kEndOfSequenceId]};
}

std::vector<std::string_view> Tokenizer::PreTokenize(
    std::string_view text) const {
  std::vector<std::string_view> out;
  auto special_at = [&](size_t pos) -> size_t {
    size_t best = 0;
    for (int id = 0; id < kNumSpecial && id < static_cast<int>(pieces_.size());
         ++id) {
      const std::string& s = pieces_[id];
      if (!s.empty() && s.size() > best && text.substr(pos, s.size()) == s) {
        best = s.size();
      }
    }
    return best;
  };
  size_t pos = 0;
  while (pos < text.size()) {
    if (const size_t n = special_at(pos); n > 0) {
      out.push_back(text.substr(pos, n));
      pos += n;
      continue;
    }
    const char c = text[pos];
    if (c == ' ' && pos + 1 < text.size() && text[pos + 1] != ' ' &&
        text[pos + 1] != '\n' && special_at(pos + 1) == 0) {
      const size_t n = 1 + UnitLength(text, pos + 1);
      out.push_back(text.substr(pos, n));
      pos += n;
      continue;
    }
    if (c == ' ' || c == '\n') {
      out.push_back(text.substr(pos, 1));
      ++pos;
      continue;
    }
    const size_t n = UnitLength(text, pos);
    out.push_back(text.substr(pos, n));
    pos += n;
  }
  return out;
}

std::vector<int> Tokenizer::Encode(std::string_view text) const {
  std::vector<int> ids;
  for (std::string_view piece : PreTokenize(text)) {
    if (auto it = lookup_.find(std::string(piece)); it != lookup_.end()) {
      ids.push_back(it->second);
      continue;
    }
    for (unsigned char c : piece) {
      const int id = char_ids_[c];
      if (id < 0) {
        throw CodecError("character 0x" + std::to_string(static_cast<int>(c)) +
                         " is outside the tokenizer alphabet");
      }
      ids.push_back(id);
    }
  }
  return ids;
}

std::string Tokenizer::Decode(std::span<const int> ids) const {
  std::string text;
  for (int id : ids) text += Piece(id);
  return text;
}

std::string_view Tokenizer::Piece(int id) const {
  if (id < 0 || id >= vocab_size()) {
    throw CodecError("token id " + std::to_string(id) + " is out of range");
  }
  return pieces_[id];
}

}  // namespace sepslab
