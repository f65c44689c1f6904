// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fxir {

/// Insertion-ordered string-keyed map.  Everything in the library that the
/// user can iterate (parameters, buffers, children, reports) must have a
/// deterministic order, so plain vectors of pairs are used throughout; the
/// collections are small enough that linear lookup is never a concern.
template <typename V>
class OrderedDict {
 public:
  using Item = std::pair<std::string, V>;
  using const_iterator = typename std::vector<Item>::const_iterator;
  using iterator = typename std::vector<Item>::iterator;

  bool contains(std::string_view key) const { return find(key) != nullptr; }

  const V* find(std::string_view key) const {
    for (const auto& [k, v] : items_) {
      if (k == key) return &v;
    }
    return nullptr;
  }

  V* find(std::string_view key) {
    for (auto& [k, v] : items_) {
      if (k == key) return &v;
    }
    return nullptr;
  }

  /// Insert or overwrite; an overwrite keeps the original position.
  void set(std::string_view key, V value) {
    if (V* existing = find(key)) {
      *existing = std::move(value);
      return;
    }
    items_.emplace_back(std::string(key), std::move(value));
  }

  bool erase(std::string_view key) {
    for (auto it = items_.begin(); it != items_.end(); ++it) {
      if (it->first == key) {
        items_.erase(it);
        return true;
      }
    }
    return false;
  }

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  const_iterator begin() const { return items_.begin(); }
  const_iterator end() const { return items_.end(); }
  iterator begin() { return items_.begin(); }
  iterator end() { return items_.end(); }

  const std::vector<Item>& items() const { return items_; }

 private:
  std::vector<Item> items_;
};

}  // namespace fxir
