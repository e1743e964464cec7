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

// Word-piece codec for the toy model.
//
// Text is split into pieces (a word or digit run with at most one leading
// space, a single punctuation character, a newline, or one of the three chat
// special strings). Pieces seen while building become tokens; any other piece
// falls back to single-character tokens from the build alphabet, so every
// string over that alphabet round-trips exactly through Encode/Decode.

#ifndef SEPSLAB_TOKENIZER_H_
#define SEPSLAB_TOKENIZER_H_

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sepslab {

// Chat scaffolding strings. They are always single tokens.
struct ChatTemplate {
  std::string instruction_start = "[INST]";
  std::string instruction_end = "[/INST]";
  std::string end_of_sequence = "</s>";

  bool operator==(const ChatTemplate&) const = default;
};

class Tokenizer {
 public:
  static constexpr int kInstructionStartId = 0;
  static constexpr int kInstructionEndId = 1;
  static constexpr int kEndOfSequenceId = 2;
  static constexpr int kNumSpecial = 3;

  Tokenizer() = default;

  // Builds the vocabulary from `texts`: every printable ASCII character plus
  // every character of the corpus becomes a fallback token, then every piece
  // that occurs at least `min_count` times.
  static Tokenizer Build(const std::vector<std::string>& texts,
                         const ChatTemplate& chat = {}, int min_count = 1);
  // Restores a codec from its piece table (ids are table positions; the
  // first kNumSpecial entries are the chat specials).
  static Tokenizer FromPieces(std::vector<std::string> pieces);

  // Throws CodecError when `text` contains a character outside the alphabet.
  std::vector<int> Encode(std::string_view text) const;
  // Throws CodecError on an out-of-range id.
  std::string Decode(std::span<const int> ids) const;
  std::string_view Piece(int id) const;

  int vocab_size() const { return static_cast<int>(pieces_.size()); }
  const std::vector<std::string>& pieces() const { return pieces_; }
  ChatTemplate chat_template() const;

  // Exposed for tests: the piece split used by Encode.
  std::vector<std::string_view> PreTokenize(std::string_view text) const;

  bool operator==(const Tokenizer& other) const {
    return pieces_ == other.pieces_;
  }

 private:
  void Index();

  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> lookup_;
  // Byte -> single-character token id, -1 when the byte is unsupported.
  std::vector<int> char_ids_ = std::vector<int>(256, -1);
};

}  // namespace sepslab

#endif  // SEPSLAB_TOKENIZER_H_
