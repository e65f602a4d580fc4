#include "h2kit/construction.hpp"

namespace h2kit {

namespace {

void traverse(const ClusterTree& rows, const ClusterTree& cols, index_t vi,
              index_t vj, int l, int q, double eta, BlockPartition& out) {
  const bool is_root_pair = l == 0;
  if (!is_root_pair && admissible(rows.boxes[vi], cols.boxes[vj], eta)) {
    out.admissible[l].emplace_back(vi - rows.flat.level_ptr[l],
                                   vj - cols.flat.level_ptr[l]);
    return;
  }
  if (l == q) {
    out.dense.emplace_back(vi - rows.flat.level_ptr[l], vj - cols.flat.level_ptr[l]);
    return;
  }
  for (index_t ci = rows.flat.head[vi]; ci != kNoNode; ci = rows.flat.next[ci])
    for (index_t cj = cols.flat.head[vj]; cj != kNoNode; cj = cols.flat.next[cj])
      traverse(rows, cols, ci, cj, l + 1, q, eta, out);
}

}  // namespace

BlockPartition dual_traversal_partition(const ClusterTree& rows,
                                        const ClusterTree& cols, double eta) {
  require(rows.flat.depth() == cols.flat.depth(),
          "dual_traversal_partition: trees must have equal depth");
  require(eta > 0, "dual_traversal_partition: eta must be positive");
  const int q = rows.flat.depth();
  BlockPartition out;
  out.admissible.resize(q + 1);
  traverse(rows, cols, 0, 0, 0, q, eta, out);
  return out;
}

}  // namespace h2kit
