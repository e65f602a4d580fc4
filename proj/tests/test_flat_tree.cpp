#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "h2kit/flat_tree.hpp"

using namespace h2kit;

TEST_CASE("complete binary tree of depth 3 has the expected flat arrays") {
  const FlatTree t = make_complete_binary_tree(3);
  CHECK(t.depth() == 3);
  CHECK(t.num_nodes() == 15);
  CHECK(t.level_ptr == std::vector<index_t>{0, 1, 3, 7, 15});

  CHECK(t.parent[0] == kNoNode);
  CHECK(t.parent[1] == 0);
  CHECK(t.parent[2] == 0);
  CHECK(t.parent[5] == 2);
  CHECK(t.parent[14] == 6);

  CHECK(t.head[0] == 1);
  CHECK(t.head[1] == 3);
  CHECK(t.head[2] == 5);
  CHECK(t.head[6] == 13);
  for (index_t v = 7; v < 15; ++v) CHECK(t.head[v] == kNoNode);

  CHECK(t.next[1] == 2);
  CHECK(t.next[2] == kNoNode);
  CHECK(t.next[13] == 14);
  CHECK(t.next[14] == kNoNode);
}

TEST_CASE("level queries and child walks") {
  const FlatTree t = make_complete_binary_tree(3);
  CHECK(t.level_size(0) == 1);
  CHECK(t.level_size(2) == 4);
  CHECK(t.level_size(3) == 8);
  CHECK(level_nodes(t, 1) == std::pair<index_t, index_t>{1, 3});
  CHECK(children(t, 0) == std::vector<index_t>{1, 2});
  CHECK(children(t, 4) == std::vector<index_t>{9, 10});
  CHECK(children(t, 10).empty());
  CHECK(t.is_leaf(9));
  CHECK_FALSE(t.is_leaf(6));
}

TEST_CASE("level queries reject out-of-range levels") {
  const FlatTree t = make_complete_binary_tree(2);
  CHECK_THROWS_AS(level_nodes(t, 3), std::invalid_argument);
  CHECK_THROWS_AS(level_nodes(t, -1), std::invalid_argument);
}

TEST_CASE("depth zero tree is a single root leaf") {
  const FlatTree t = make_complete_binary_tree(0);
  CHECK(t.depth() == 0);
  CHECK(t.num_nodes() == 1);
  CHECK(t.is_leaf(0));
  CHECK(validate_tree(t));
}

TEST_CASE("rebuild_child_links reproduces head/next from parents") {
  FlatTree t = make_complete_binary_tree(4);
  const std::vector<index_t> head = t.head, next = t.next;
  std::fill(t.head.begin(), t.head.end(), index_t(99));
  std::fill(t.next.begin(), t.next.end(), index_t(99));
  rebuild_child_links(t);
  CHECK(t.head == head);
  CHECK(t.next == next);
  CHECK(validate_tree(t));
}

TEST_CASE("validate_tree rejects inconsistent structures") {
  FlatTree t = make_complete_binary_tree(2);
  CHECK(validate_tree(t));
  FlatTree bad = t;
  bad.parent[3] = 2;  // contradicts the child links
  CHECK_FALSE(validate_tree(bad));
  bad = t;
  bad.level_ptr[1] = 0;  // non-monotone level boundaries
  CHECK_FALSE(validate_tree(bad));
}
