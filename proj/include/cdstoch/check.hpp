/*
 * Copyright 2026 The cdstoch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <string>
#include <utility>
#include <vector>

namespace cdstoch {

/// One named check with the numbers behind it. Reported-only entries have asserted == false and
/// never fail a run.
struct Check {
    std::string name;
    bool passed = true;
    bool asserted = true;
    std::vector<std::pair<std::string, double>> values;
    std::string note;

    Check& set(const std::string& key, double v);
    [[nodiscard]] double get(const std::string& key) const;
};

struct CheckGroup {
    std::vector<Check> checks;

    Check& add(std::string name, bool passed, bool asserted = true);
    void append(const CheckGroup& other, const std::string& prefix = "");
    [[nodiscard]] bool passed() const;
    [[nodiscard]] const Check& at(const std::string& name) const;
    [[nodiscard]] double value(const std::string& name, const std::string& key) const { return at(name).get(key); }
};

}  // namespace cdstoch
