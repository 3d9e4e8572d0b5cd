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

#ifndef HNCL_TEXT_H_
#define HNCL_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace hncl {

// A caption as a whitespace-separated token sequence. Tokens are kept
// verbatim; matching goes through NormalizeToken.
using Caption = std::vector<std::string>;

Caption Tokenize(std::string_view text);
std::string Join(const Caption& caption);

// Lowercases ASCII letters and strips punctuation from both token edges.
std::string NormalizeToken(std::string_view token);

// Leading and trailing punctuation runs of a raw token.
std::string_view LeadingPunct(std::string_view token);
std::string_view TrailingPunct(std::string_view token);

}  // namespace hncl

#endif  // HNCL_TEXT_H_
