#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "unrn/numerics.hpp"

namespace unrn {

struct BankEntry {
  Vec feature;         // teacher feature at push time
  int label = 0;       // pseudo label at push time
  double uncertainty = 0.0;
};

struct BankPairRef {
  const Vec* feature = nullptr;
  double uncertainty = 0.0;
};

struct BankPartition {
  std::vector<BankPairRef> positives;
  std::vector<BankPairRef> negatives;
};

// Cross-batch FIFO queue of teacher features plus the source class centers
// as permanent extra negatives (uncertainty zero). Capacity 0 keeps the
// queue empty, so only those permanent negatives remain.
class MemoryBank {
 public:
  MemoryBank(std::size_t capacity, Matrix source_centers);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  const std::deque<BankEntry>& entries() const { return entries_; }
  const Matrix& source_centers() const { return source_centers_; }

  // Appends in order, evicting the oldest entries beyond capacity. All three
  // ranges must have equal length; an outlier label throws.
  void push_batch(const std::vector<Vec>& features, const std::vector<int>& labels,
                  const std::vector<double>& uncertainties);

  void clear() { entries_.clear(); }

  // Entries sharing anchor_label against everything else. Source centers are
  // all negatives, so positives.size() + negatives.size() always equals
  // size() + source_centers().size(). Pointers stay valid until the next
  // push_batch or clear.
  BankPartition partition_for_anchor(int anchor_label) const;

 private:
  std::size_t capacity_;
  std::deque<BankEntry> entries_;
  Matrix source_centers_;
};

}  // namespace unrn
