#include "h2kit/flat_tree.hpp"

#include <algorithm>

namespace h2kit {

std::pair<index_t, index_t> level_nodes(const FlatTree& tree, int l) {
  require(l >= 0 && l <= tree.depth(), "level_nodes: level out of bounds");
  return {tree.level_ptr[l], tree.level_ptr[l + 1]};
}

std::vector<index_t> children(const FlatTree& tree, index_t v) {
  std::vector<index_t> out;
  for (index_t c = tree.head[v]; c != kNoNode; c = tree.next[c]) out.push_back(c);
  return out;
}

FlatTree make_complete_binary_tree(int depth) {
  FlatTree t;
  t.level_ptr.resize(depth + 2);
  t.level_ptr[0] = 0;
  for (int l = 0; l <= depth; ++l)
    t.level_ptr[l + 1] = t.level_ptr[l] + (index_t(1) << l);
  const index_t n = t.level_ptr.back();
  t.parent.assign(n, kNoNode);
  t.head.assign(n, kNoNode);
  t.next.assign(n, kNoNode);
  for (int l = 0; l < depth; ++l) {
    const index_t p0 = t.level_ptr[l], c0 = t.level_ptr[l + 1];
    const index_t np = t.level_ptr[l + 1] - p0;
    for (index_t i = 0; i < np; ++i) {
      const index_t p = p0 + i;
      const index_t c1 = c0 + 2 * i, c2 = c1 + 1;
      t.head[p] = c1;
      t.next[c1] = c2;
      t.parent[c1] = p;
      t.parent[c2] = p;
    }
  }
  return t;
}

void rebuild_child_links(FlatTree& tree) {
  const index_t n = tree.num_nodes();
  tree.head.assign(n, kNoNode);
  tree.next.assign(n, kNoNode);
  std::vector<index_t> tail(n, kNoNode);
  for (index_t v = 0; v < n; ++v) {
    const index_t p = tree.parent[v];
    if (p == kNoNode) continue;
    if (tree.head[p] == kNoNode)
      tree.head[p] = v;
    else
      tree.next[tail[p]] = v;
    tail[p] = v;
  }
}

bool validate_tree(const FlatTree& tree) {
  const index_t n = tree.num_nodes();
  if (tree.parent.size() != size_t(n) || tree.head.size() != size_t(n) ||
      tree.next.size() != size_t(n))
    return false;
  for (size_t l = 0; l + 1 < tree.level_ptr.size(); ++l)
    if (tree.level_ptr[l] >= tree.level_ptr[l + 1]) return false;
  // Every non-root node appears in the child list of its parent.
  for (index_t v = 0; v < n; ++v) {
    const index_t p = tree.parent[v];
    if (p == kNoNode) continue;
    bool found = false;
    for (index_t c = tree.head[p]; c != kNoNode; c = tree.next[c])
      if (c == v) {
        found = true;
        break;
      }
    if (!found) return false;
  }
  for (index_t v = 0; v < n; ++v)
    for (index_t c = tree.head[v]; c != kNoNode; c = tree.next[c])
      if (tree.parent[c] != v) return false;
  return true;
}

}  // namespace h2kit
