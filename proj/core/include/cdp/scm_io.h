/*
 * Copyright 2026 The CDP Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// Text format for SCMs:
//
//   # comment
//   scm salary
//   var P { noise = uniform(0, 1.5) }
//   var F { parents = [P]; eq = "2*P^3"; noise = normal(0, 0.2) }
//
// Roots omit parents and eq; a missing noise means point(0).

#ifndef CDP_SCM_IO_H_
#define CDP_SCM_IO_H_

#include <string>
#include <string_view>

#include "cdp/scm.h"

namespace cdp {

// ParseError with the line number on malformed text (including a duplicate
// variable declaration). The result is not yet validated.
ScmSpec ParseScmSpec(std::string_view text);

// ValidationError for mechanisms the format cannot express (intervention
// results with assigned values or frozen inputs).
std::string FormatScmSpec(const ScmSpec& spec);
std::string FormatScm(const Scm& scm);

Scm LoadScm(const std::string& path);
void SaveScm(const std::string& path, const Scm& scm);

}  // namespace cdp

#endif  // CDP_SCM_IO_H_
