/* Copyright (c) 2026 The sdconv Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace sdconv::csv {

/// Shortest round-trip decimal form, '.' separator, independent of locale.
std::string format(double v);
std::string format(long long v);

/// Writes one comma-separated line terminated by LF.
void write_row(std::ostream& os, const std::vector<std::string>& fields);
void write_row(std::ostream& os, std::initializer_list<std::string_view> fields);

}  // namespace sdconv::csv
