#include "unrn/memory_bank.hpp"

#include <stdexcept>

#include "unrn/clustering.hpp"

namespace unrn {

MemoryBank::MemoryBank(std::size_t capacity, Matrix source_centers)
    : capacity_(capacity), source_centers_(std::move(source_centers)) {}

void MemoryBank::push_batch(const std::vector<Vec>& features,
                            const std::vector<int>& labels,
                            const std::vector<double>& uncertainties) {
  if (features.size() != labels.size() || features.size() != uncertainties.size()) {
    throw std::invalid_argument("dimension mismatch");
  }
  // Validate before touching the queue so a bad batch has no effect.
  for (int label : labels) {
    if (label == kOutlierLabel) {
      throw std::invalid_argument("outlier pushed into memory bank");
    }
  }
  for (std::size_t i = 0; i < features.size(); ++i) {
    entries_.push_back(BankEntry{features[i], labels[i], uncertainties[i]});
  }
  while (entries_.size() > capacity_) entries_.pop_front();
}

BankPartition MemoryBank::partition_for_anchor(int anchor_label) const {
  BankPartition part;
  for (const BankEntry& e : entries_) {
    BankPairRef ref{&e.feature, e.uncertainty};
    if (e.label == anchor_label) {
      part.positives.push_back(ref);
    } else {
      part.negatives.push_back(ref);
    }
  }
  for (const Vec& center : source_centers_) {
    part.negatives.push_back(BankPairRef{&center, 0.0});
  }
  return part;
}

}  // namespace unrn
