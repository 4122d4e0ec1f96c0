#pragma once

#include <cstddef>
#include <vector>

#include "quartet/geom.hpp"

namespace quartet {

// Static 3-d tree for exact nearest-neighbour queries.
class KdTree {
 public:
  explicit KdTree(const std::vector<Point3>& points);

  // Squared distance to, and index of, the closest stored point.
  struct Hit {
    double squared_distance;
    std::size_t index;
  };
  Hit nearest(const Point3& query) const;

 private:
  struct Node {
    int axis = -1;  // -1 marks a leaf
    double split = 0;
    std::size_t begin = 0, end = 0;
    int left = -1, right = -1;
  };

  int build(std::size_t begin, std::size_t end, int depth);
  void search(int node, const Point3& q, Hit& best) const;

  std::vector<Point3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace quartet
