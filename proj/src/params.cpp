#include "hma/params.hpp"

namespace hma {

Tensor& ModelParams::add(std::string name, Tensor t, bool trainable,
                         bool frozen_pad_row) {
  if (index_.count(name)) {
    throw ContractError("ModelParams: duplicate parameter " + name);
  }
  t.set_requires_grad(trainable);
  index_.emplace(name, entries_.size());
  entries_.push_back(Entry{std::move(name), std::move(t), trainable,
                           frozen_pad_row});
  return entries_.back().tensor;
}

bool ModelParams::contains(const std::string& name) const {
  return index_.count(name) != 0;
}

Tensor& ModelParams::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw ContractError("ModelParams: unknown parameter " + name);
  }
  return entries_[it->second].tensor;
}

const Tensor& ModelParams::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw ContractError("ModelParams: unknown parameter " + name);
  }
  return entries_[it->second].tensor;
}

void ModelParams::zero_grads() {
  for (Entry& e : entries_) {
    if (e.trainable) e.tensor.zero_grad();
  }
}

}  // namespace hma
