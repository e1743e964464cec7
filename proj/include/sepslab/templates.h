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

// Prompt templates shipped with the binary.

#ifndef SEPSLAB_TEMPLATES_H_
#define SEPSLAB_TEMPLATES_H_

#include <map>
#include <string>
#include <string_view>

namespace sepslab {

// Template body by name ("judge_single", "judge_mixed", "judge_stress",
// "stress_instruction"), without the file's trailing newline. Throws
// ValidationError for an unknown name.
std::string_view TemplateAsset(std::string_view name);

// Replaces every "{{key}}" with its value. Throws ValidationError when a
// placeholder in `pattern` has no value.
std::string Interpolate(std::string_view pattern,
                        const std::map<std::string, std::string>& values);

}  // namespace sepslab

#endif  // SEPSLAB_TEMPLATES_H_
