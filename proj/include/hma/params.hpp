#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hma/tensor.hpp"

namespace hma {

/// Every model array, addressable by a stable name. Registration order is
/// fixed by the model builder and determines checkpoint layout.
class ModelParams {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
    bool trainable = true;
    /// Row 0 is a padding row that must stay all-zero; its gradient is
    /// discarded before every optimizer update.
    bool frozen_pad_row = false;
  };

  Tensor& add(std::string name, Tensor t, bool trainable = true,
              bool frozen_pad_row = false);

  bool contains(const std::string& name) const;
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  std::span<Entry> entries() { return entries_; }
  std::span<const Entry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Allocates and zero-fills gradient buffers of all trainable entries.
  void zero_grads();

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace hma
