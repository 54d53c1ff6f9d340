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
#include "cdstoch/check.hpp"

#include <algorithm>
#include <stdexcept>

namespace cdstoch {

Check& Check::set(const std::string& key, double v) {
    for (auto& kv : values) {
        if (kv.first == key) {
            kv.second = v;
            return *this;
        }
    }
    values.emplace_back(key, v);
    return *this;
}

double Check::get(const std::string& key) const {
    for (const auto& kv : values) {
        if (kv.first == key) return kv.second;
    }
    throw std::out_of_range("check '" + name + "' has no value '" + key + "'");
}

Check& CheckGroup::add(std::string name, bool passed, bool asserted) {
    Check c;
    c.name = std::move(name);
    c.passed = passed;
    c.asserted = asserted;
    checks.push_back(std::move(c));
    return checks.back();
}

void CheckGroup::append(const CheckGroup& other, const std::string& prefix) {
    for (Check c : other.checks) {
        c.name = prefix + c.name;
        checks.push_back(std::move(c));
    }
}

bool CheckGroup::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return !c.asserted || c.passed; });
}

const Check& CheckGroup::at(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) return c;
    }
    throw std::out_of_range("no check named '" + name + "'");
}

}  // namespace cdstoch
