//
// Copyright 2026 The hncl Authors
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
//

#include "hncl/text.h"

#include <cctype>

namespace hncl {

namespace {

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)); }
bool IsPunct(char c) { return std::ispunct(static_cast<unsigned char>(c)); }

}  // namespace

Caption Tokenize(std::string_view text) {
  Caption tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && IsSpace(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !IsSpace(text[i])) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

std::string Join(const Caption& caption) {
  std::string out;
  for (const std::string& token : caption) {
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return out;
}

std::string_view LeadingPunct(std::string_view token) {
  std::size_t n = 0;
  while (n < token.size() && IsPunct(token[n])) ++n;
  return token.substr(0, n);
}

std::string_view TrailingPunct(std::string_view token) {
  std::size_t n = 0;
  while (n < token.size() && IsPunct(token[token.size() - 1 - n])) ++n;
  if (n == token.size()) return {};  // all punctuation: leading run owns it
  return token.substr(token.size() - n);
}

std::string NormalizeToken(std::string_view token) {
  std::size_t begin = LeadingPunct(token).size();
  std::size_t end = token.size() - TrailingPunct(token).size();
  std::string out;
  if (begin >= end) return out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    out.push_back(static_cast<char>(
        std::tolower(static_cast<unsigned char>(token[i]))));
  }
  return out;
}

}  // namespace hncl
