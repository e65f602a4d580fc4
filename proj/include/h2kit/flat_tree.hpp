#ifndef H2KIT_FLAT_TREE_HPP
#define H2KIT_FLAT_TREE_HPP

#include <utility>
#include <vector>

#include "h2kit/defs.hpp"

namespace h2kit {

// Level-flattened tree stored breadth-first: the nodes of level l occupy the
// index range [level_ptr[l], level_ptr[l+1]), so a node's level-local offset
// is node - level_ptr[l]. All marshaling arithmetic relies on this layout.
struct FlatTree {
  std::vector<index_t> parent;     // kNoNode at the root
  std::vector<index_t> head;       // first child, kNoNode at leaves
  std::vector<index_t> next;       // next sibling, kNoNode at last sibling
  std::vector<index_t> level_ptr;  // depth+2 offsets

  int depth() const { return static_cast<int>(level_ptr.size()) - 2; }
  index_t num_nodes() const { return level_ptr.back(); }
  index_t level_begin(int l) const { return level_ptr[l]; }
  index_t level_end(int l) const { return level_ptr[l + 1]; }
  index_t level_size(int l) const { return level_ptr[l + 1] - level_ptr[l]; }
  bool is_leaf(index_t v) const { return head[v] == kNoNode; }
};

// Half-open node index range of level l.
std::pair<index_t, index_t> level_nodes(const FlatTree& tree, int l);

// Ordered child list of node v (head, then the next chain).
std::vector<index_t> children(const FlatTree& tree, index_t v);

// Complete binary tree of the given depth in breadth-first order.
FlatTree make_complete_binary_tree(int depth);

// Rebuild (head, next) from the parent array, preserving child order by
// node index. Used by the structural round-trip checks and by load().
void rebuild_child_links(FlatTree& tree);

// Structural validation: parent/child consistency and level pointers.
bool validate_tree(const FlatTree& tree);

}  // namespace h2kit

#endif
