#include "ava/marching_cubes.hpp"

#include <unordered_map>

namespace ava {

namespace {

// Cube corner offsets and the edges between them (Bourke layout).
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {6, 5},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

constexpr int8_t kTriTable[256][16] = {
    {-1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {0, 8, 3, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {1, 9, 0, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {8, 1, 9, 8, 3, 1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {2, 10, 1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {0, 8, 3, 1, 2, 10, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {9, 2, 10, 9, 0, 2, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {3, 2, 10, 3, 10, 8, 8, 10, 9, -1, -1, -1, -1, -1, -1, -1},
    {2, 3, 11, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {11, 0, 8, 11, 2, 0, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {1, 9, 0, 2, 3, 11, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {2, 1, 9, 2, 9, 11, 11, 9, 8, -1, -1, -1, -1, -1, -1, -1},
    {3, 10, 1, 3, 11, 10, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {1, 0, 8, 1, 8, 10, 10, 8, 11, -1, -1, -1, -1, -1, -1, -1},
    {0, 3, 11, 0, 11, 9, 9, 11, 10, -1, -1, -1, -1, -1, -1, -1},
    {11, 10, 9, 11, 9, 8, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {4, 7, 8, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {4, 3, 0, 4, 7, 3, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {4, 7, 8, 9, 0, 1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {9, 4, 7, 9, 7, 1, 1, 7, 3, -1, -1, -1, -1, -1, -1, -1},
    {4, 7, 8, 1, 2, 10, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {4, 3, 0, 4, 7, 3, 2, 10, 1, -1, -1, -1, -1, -1, -1, -1},
    {2, 9, 0, 2, 10, 9, 4, 7, 8, -1, -1, -1, -1, -1, -1, -1},
    {3, 2, 7, 7, 9, 4, 7, 2, 9, 9, 2, 10, -1, -1, -1, -1},
    {8, 4, 7, 3, 11, 2, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {7, 11, 2, 7, 2, 4, 4, 2, 0, -1, -1, -1, -1, -1, -1, -1},
    {2, 3, 11, 1, 9, 0, 8, 4, 7, -1, -1, -1, -1, -1, -1, -1},
    {2, 1, 9, 2, 9, 4, 2, 4, 11, 11, 4, 7, -1, -1, -1, -1},
    {10, 3, 11, 10, 1, 3, 8, 4, 7, -1, -1, -1, -1, -1, -1, -1},
    {4, 7, 0, 0, 10, 1, 7, 10, 0, 7, 11, 10, -1, -1, -1, -1},
    {8, 4, 7, 0, 3, 11, 0, 11, 9, 9, 11, 10, -1, -1, -1, -1},
    {7, 9, 4, 7, 11, 9, 9, 11, 10, -1, -1, -1, -1, -1, -1, -1},
    {4, 9, 5, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {8, 3, 0, 4, 9, 5, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {0, 5, 4, 0, 1, 5, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {4, 8, 3, 4, 3, 5, 5, 3, 1, -1, -1, -1, -1, -1, -1, -1},
    {1, 2, 10, 9, 5, 4, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {4, 9, 5, 8, 3, 0, 1, 2, 10, -1, -1, -1, -1, -1, -1, -1},
    {10, 5, 4, 10, 4, 2, 2, 4, 0, -1, -1, -1, -1, -1, -1, -1},
    {4, 8, 3, 4, 3, 2, 4, 2, 5, 5, 2, 10, -1, -1, -1, -1},
    {2, 3, 11, 5, 4, 9, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {11, 0, 8, 11, 2, 0, 9, 5, 4, -1, -1, -1, -1, -1, -1, -1},
    {5, 0, 1, 5, 4, 0, 3, 11, 2, -1, -1, -1, -1, -1, -1, -1},
    {11, 2, 8, 8, 5, 4, 2, 5, 8, 2, 1, 5, -1, -1, -1, -1},
    {3, 10, 1, 3, 11, 10, 5, 4, 9, -1, -1, -1, -1, -1, -1, -1},
    {9, 5, 4, 1, 0, 8, 1, 8, 10, 10, 8, 11, -1, -1, -1, -1},
    {10, 5, 11, 11, 0, 3, 11, 5, 0, 0, 5, 4, -1, -1, -1, -1},
    {4, 10, 5, 4, 8, 10, 10, 8, 11, -1, -1, -1, -1, -1, -1, -1},
    {7, 9, 5, 7, 8, 9, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {0, 9, 5, 0, 5, 3, 3, 5, 7, -1, -1, -1, -1, -1, -1, -1},
    {8, 0, 1, 8, 1, 7, 7, 1, 5, -1, -1, -1, -1, -1, -1, -1},
    {3, 1, 5, 3, 5, 7, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {7, 9, 5, 7, 8, 9, 1, 2, 10, -1, -1, -1, -1, -1, -1, -1},
    {1, 2, 10, 0, 9, 5, 0, 5, 3, 3, 5, 7, -1, -1, -1, -1},
    {7, 8, 5, 5, 2, 10, 8, 2, 5, 8, 0, 2, -1, -1, -1, -1},
    {10, 3, 2, 10, 5, 3, 3, 5, 7, -1, -1, -1, -1, -1, -1, -1},
    {9, 7, 8, 9, 5, 7, 11, 2, 3, -1, -1, -1, -1, -1, -1, -1},
    {0, 9, 2, 2, 7, 11, 2, 9, 7, 7, 9, 5, -1, -1, -1, -1},
    {3, 11, 2, 8, 0, 1, 8, 1, 7, 7, 1, 5, -1, -1, -1, -1},
    {2, 7, 11, 2, 1, 7, 7, 1, 5, -1, -1, -1, -1, -1, -1, -1},
    {11, 1, 3, 11, 10, 1, 7, 8, 9, 7, 9, 5, -1, -1, -1, -1},
    {11, 10, 1, 11, 1, 7, 7, 1, 0, 7, 0, 9, 7, 9, 5, -1},
    {5, 7, 8, 5, 8, 10, 10, 8, 0, 10, 0, 3, 10, 3, 11, -1},
    {11, 10, 5, 11, 5, 7, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {10, 6, 5, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {0, 8, 3, 10, 6, 5, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {9, 0, 1, 5, 10, 6, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {8, 1, 9, 8, 3, 1, 10, 6, 5, -1, -1, -1, -1, -1, -1, -1},
    {6, 1, 2, 6, 5, 1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {6, 1, 2, 6, 5, 1, 0, 8, 3, -1, -1, -1, -1, -1, -1, -1},
    {5, 9, 0, 5, 0, 6, 6, 0, 2, -1, -1, -1, -1, -1, -1, -1},
    {6, 5, 2, 2, 8, 3, 5, 8, 2, 5, 9, 8, -1, -1, -1, -1},
    {2, 3, 11, 10, 6, 5, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {0, 11, 2, 0, 8, 11, 6, 5, 10, -1, -1, -1, -1, -1, -1, -1},
    {0, 1, 9, 3, 11, 2, 10, 6, 5, -1, -1, -1, -1, -1, -1, -1},
    {10, 6, 5, 2, 1, 9, 2, 9, 11, 11, 9, 8, -1, -1, -1, -1},
    {11, 6, 5, 11, 5, 3, 3, 5, 1, -1, -1, -1, -1, -1, -1, -1},
    {11, 6, 8, 8, 1, 0, 8, 6, 1, 1, 6, 5, -1, -1, -1, -1},
    {0, 3, 11, 0, 11, 6, 0, 6, 9, 9, 6, 5, -1, -1, -1, -1},
    {5, 11, 6, 5, 9, 11, 11, 9, 8, -1, -1, -1, -1, -1, -1, -1},
    {7, 8, 4, 6, 5, 10, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {3, 4, 7, 3, 0, 4, 5, 10, 6, -1, -1, -1, -1, -1, -1, -1},
    {6, 5, 10, 7, 8, 4, 9, 0, 1, -1, -1, -1, -1, -1, -1, -1},
    {5, 10, 6, 9, 4, 7, 9, 7, 1, 1, 7, 3, -1, -1, -1, -1},
    {1, 6, 5, 1, 2, 6, 7, 8, 4, -1, -1, -1, -1, -1, -1, -1},
    {7, 0, 4, 7, 3, 0, 6, 5, 1, 6, 1, 2, -1, -1, -1, -1},
    {4, 7, 8, 5, 9, 0, 5, 0, 6, 6, 0, 2, -1, -1, -1, -1},
    {2, 6, 5, 2, 5, 3, 3, 5, 9, 3, 9, 4, 3, 4, 7, -1},
    {4, 7, 8, 5, 10, 6, 11, 2, 3, -1, -1, -1, -1, -1, -1, -1},
    {6, 5, 10, 7, 11, 2, 7, 2, 4, 4, 2, 0, -1, -1, -1, -1},
    {4, 7, 8, 9, 0, 1, 6, 5, 10, 3, 11, 2, -1, -1, -1, -1},
    {6, 5, 10, 11, 4, 7, 11, 2, 4, 4, 2, 9, 9, 2, 1, -1},
    {7, 8, 4, 11, 6, 5, 11, 5, 3, 3, 5, 1, -1, -1, -1, -1},
    {0, 4, 7, 0, 7, 1, 1, 7, 11, 1, 11, 6, 1, 6, 5, -1},
    {4, 7, 8, 9, 6, 5, 9, 0, 6, 6, 0, 11, 11, 0, 3, -1},
    {7, 11, 4, 11, 9, 4, 11, 5, 9, 11, 6, 5, -1, -1, -1, -1},
    {10, 4, 9, 10, 6, 4, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {10, 4, 9, 10, 6, 4, 8, 3, 0, -1, -1, -1, -1, -1, -1, -1},
    {1, 10, 6, 1, 6, 0, 0, 6, 4, -1, -1, -1, -1, -1, -1, -1},
    {4, 8, 6, 6, 1, 10, 6, 8, 1, 1, 8, 3, -1, -1, -1, -1},
    {9, 1, 2, 9, 2, 4, 4, 2, 6, -1, -1, -1, -1, -1, -1, -1},
    {0, 8, 3, 9, 1, 2, 9, 2, 4, 4, 2, 6, -1, -1, -1, -1},
    {0, 2, 6, 0, 6, 4, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {3, 4, 8, 3, 2, 4, 4, 2, 6, -1, -1, -1, -1, -1, -1, -1},
    {4, 10, 6, 4, 9, 10, 2, 3, 11, -1, -1, -1, -1, -1, -1, -1},
    {8, 2, 0, 8, 11, 2, 4, 9, 10, 4, 10, 6, -1, -1, -1, -1},
    {2, 3, 11, 1, 10, 6, 1, 6, 0, 0, 6, 4, -1, -1, -1, -1},
    {8, 11, 2, 8, 2, 4, 4, 2, 1, 4, 1, 10, 4, 10, 6, -1},
    {3, 11, 1, 1, 4, 9, 11, 4, 1, 11, 6, 4, -1, -1, -1, -1},
    {6, 4, 9, 6, 9, 11, 11, 9, 1, 11, 1, 0, 11, 0, 8, -1},
    {11, 0, 3, 11, 6, 0, 0, 6, 4, -1, -1, -1, -1, -1, -1, -1},
    {8, 11, 6, 8, 6, 4, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {6, 7, 8, 6, 8, 10, 10, 8, 9, -1, -1, -1, -1, -1, -1, -1},
    {3, 0, 7, 7, 10, 6, 0, 10, 7, 0, 9, 10, -1, -1, -1, -1},
    {1, 10, 6, 1, 6, 7, 1, 7, 0, 0, 7, 8, -1, -1, -1, -1},
    {6, 1, 10, 6, 7, 1, 1, 7, 3, -1, -1, -1, -1, -1, -1, -1},
    {9, 1, 8, 8, 6, 7, 8, 1, 6, 6, 1, 2, -1, -1, -1, -1},
    {7, 3, 0, 7, 0, 6, 6, 0, 9, 6, 9, 1, 6, 1, 2, -1},
    {8, 6, 7, 8, 0, 6, 6, 0, 2, -1, -1, -1, -1, -1, -1, -1},
    {2, 6, 7, 2, 7, 3, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {11, 2, 3, 6, 7, 8, 6, 8, 10, 10, 8, 9, -1, -1, -1, -1},
    {9, 10, 6, 9, 6, 0, 0, 6, 7, 0, 7, 11, 0, 11, 2, -1},
    {3, 11, 2, 0, 7, 8, 0, 1, 7, 7, 1, 6, 6, 1, 10, -1},
    {6, 7, 10, 7, 1, 10, 7, 2, 1, 7, 11, 2, -1, -1, -1, -1},
    {1, 3, 11, 1, 11, 9, 9, 11, 6, 9, 6, 7, 9, 7, 8, -1},
    {6, 7, 11, 9, 1, 0, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {8, 0, 7, 0, 6, 7, 0, 11, 6, 0, 3, 11, -1, -1, -1, -1},
    {6, 7, 11, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {6, 11, 7, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {3, 0, 8, 11, 7, 6, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {6, 11, 7, 9, 0, 1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {1, 8, 3, 1, 9, 8, 7, 6, 11, -1, -1, -1, -1, -1, -1, -1},
    {11, 7, 6, 2, 10, 1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {1, 2, 10, 0, 8, 3, 11, 7, 6, -1, -1, -1, -1, -1, -1, -1},
    {9, 2, 10, 9, 0, 2, 11, 7, 6, -1, -1, -1, -1, -1, -1, -1},
    {11, 7, 6, 3, 2, 10, 3, 10, 8, 8, 10, 9, -1, -1, -1, -1},
    {2, 7, 6, 2, 3, 7, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {8, 7, 6, 8, 6, 0, 0, 6, 2, -1, -1, -1, -1, -1, -1, -1},
    {7, 2, 3, 7, 6, 2, 1, 9, 0, -1, -1, -1, -1, -1, -1, -1},
    {8, 7, 9, 9, 2, 1, 9, 7, 2, 2, 7, 6, -1, -1, -1, -1},
    {6, 10, 1, 6, 1, 7, 7, 1, 3, -1, -1, -1, -1, -1, -1, -1},
    {6, 10, 1, 6, 1, 0, 6, 0, 7, 7, 0, 8, -1, -1, -1, -1},
    {7, 6, 3, 3, 9, 0, 6, 9, 3, 6, 10, 9, -1, -1, -1, -1},
    {6, 8, 7, 6, 10, 8, 8, 10, 9, -1, -1, -1, -1, -1, -1, -1},
    {8, 6, 11, 8, 4, 6, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {11, 3, 0, 11, 0, 6, 6, 0, 4, -1, -1, -1, -1, -1, -1, -1},
    {6, 8, 4, 6, 11, 8, 0, 1, 9, -1, -1, -1, -1, -1, -1, -1},
    {1, 9, 3, 3, 6, 11, 9, 6, 3, 9, 4, 6, -1, -1, -1, -1},
    {8, 6, 11, 8, 4, 6, 10, 1, 2, -1, -1, -1, -1, -1, -1, -1},
    {2, 10, 1, 11, 3, 0, 11, 0, 6, 6, 0, 4, -1, -1, -1, -1},
    {11, 4, 6, 11, 8, 4, 2, 10, 9, 2, 9, 0, -1, -1, -1, -1},
    {4, 6, 11, 4, 11, 9, 9, 11, 3, 9, 3, 2, 9, 2, 10, -1},
    {3, 8, 4, 3, 4, 2, 2, 4, 6, -1, -1, -1, -1, -1, -1, -1},
    {2, 0, 4, 2, 4, 6, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {0, 1, 9, 3, 8, 4, 3, 4, 2, 2, 4, 6, -1, -1, -1, -1},
    {9, 2, 1, 9, 4, 2, 2, 4, 6, -1, -1, -1, -1, -1, -1, -1},
    {6, 10, 4, 4, 3, 8, 4, 10, 3, 3, 10, 1, -1, -1, -1, -1},
    {1, 6, 10, 1, 0, 6, 6, 0, 4, -1, -1, -1, -1, -1, -1, -1},
    {10, 9, 0, 10, 0, 6, 6, 0, 3, 6, 3, 8, 6, 8, 4, -1},
    {10, 9, 4, 10, 4, 6, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {6, 11, 7, 5, 4, 9, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {0, 8, 3, 9, 5, 4, 7, 6, 11, -1, -1, -1, -1, -1, -1, -1},
    {0, 5, 4, 0, 1, 5, 6, 11, 7, -1, -1, -1, -1, -1, -1, -1},
    {7, 6, 11, 4, 8, 3, 4, 3, 5, 5, 3, 1, -1, -1, -1, -1},
    {2, 10, 1, 11, 7, 6, 5, 4, 9, -1, -1, -1, -1, -1, -1, -1},
    {0, 8, 3, 1, 2, 10, 4, 9, 5, 11, 7, 6, -1, -1, -1, -1},
    {6, 11, 7, 10, 5, 4, 10, 4, 2, 2, 4, 0, -1, -1, -1, -1},
    {6, 11, 7, 5, 2, 10, 5, 4, 2, 2, 4, 3, 3, 4, 8, -1},
    {2, 7, 6, 2, 3, 7, 4, 9, 5, -1, -1, -1, -1, -1, -1, -1},
    {4, 9, 5, 8, 7, 6, 8, 6, 0, 0, 6, 2, -1, -1, -1, -1},
    {3, 6, 2, 3, 7, 6, 0, 1, 5, 0, 5, 4, -1, -1, -1, -1},
    {1, 5, 4, 1, 4, 2, 2, 4, 8, 2, 8, 7, 2, 7, 6, -1},
    {5, 4, 9, 6, 10, 1, 6, 1, 7, 7, 1, 3, -1, -1, -1, -1},
    {4, 9, 5, 7, 0, 8, 7, 6, 0, 0, 6, 1, 1, 6, 10, -1},
    {3, 7, 6, 3, 6, 0, 0, 6, 10, 0, 10, 5, 0, 5, 4, -1},
    {4, 8, 5, 8, 10, 5, 8, 6, 10, 8, 7, 6, -1, -1, -1, -1},
    {5, 6, 11, 5, 11, 9, 9, 11, 8, -1, -1, -1, -1, -1, -1, -1},
    {0, 9, 5, 0, 5, 6, 0, 6, 3, 3, 6, 11, -1, -1, -1, -1},
    {8, 0, 11, 11, 5, 6, 11, 0, 5, 5, 0, 1, -1, -1, -1, -1},
    {11, 5, 6, 11, 3, 5, 5, 3, 1, -1, -1, -1, -1, -1, -1, -1},
    {10, 1, 2, 5, 6, 11, 5, 11, 9, 9, 11, 8, -1, -1, -1, -1},
    {2, 10, 1, 3, 6, 11, 3, 0, 6, 6, 0, 5, 5, 0, 9, -1},
    {0, 2, 10, 0, 10, 8, 8, 10, 5, 8, 5, 6, 8, 6, 11, -1},
    {11, 3, 6, 3, 5, 6, 3, 10, 5, 3, 2, 10, -1, -1, -1, -1},
    {2, 3, 6, 6, 9, 5, 3, 9, 6, 3, 8, 9, -1, -1, -1, -1},
    {5, 0, 9, 5, 6, 0, 0, 6, 2, -1, -1, -1, -1, -1, -1, -1},
    {6, 2, 3, 6, 3, 5, 5, 3, 8, 5, 8, 0, 5, 0, 1, -1},
    {6, 2, 1, 6, 1, 5, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {8, 9, 5, 8, 5, 3, 3, 5, 6, 3, 6, 10, 3, 10, 1, -1},
    {1, 0, 10, 0, 6, 10, 0, 5, 6, 0, 9, 5, -1, -1, -1, -1},
    {0, 3, 8, 10, 5, 6, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {10, 5, 6, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {11, 5, 10, 11, 7, 5, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {5, 11, 7, 5, 10, 11, 3, 0, 8, -1, -1, -1, -1, -1, -1, -1},
    {11, 5, 10, 11, 7, 5, 9, 0, 1, -1, -1, -1, -1, -1, -1, -1},
    {9, 3, 1, 9, 8, 3, 5, 10, 11, 5, 11, 7, -1, -1, -1, -1},
    {2, 11, 7, 2, 7, 1, 1, 7, 5, -1, -1, -1, -1, -1, -1, -1},
    {3, 0, 8, 2, 11, 7, 2, 7, 1, 1, 7, 5, -1, -1, -1, -1},
    {2, 11, 0, 0, 5, 9, 0, 11, 5, 5, 11, 7, -1, -1, -1, -1},
    {9, 8, 3, 9, 3, 5, 5, 3, 2, 5, 2, 11, 5, 11, 7, -1},
    {10, 2, 3, 10, 3, 5, 5, 3, 7, -1, -1, -1, -1, -1, -1, -1},
    {5, 10, 7, 7, 0, 8, 10, 0, 7, 10, 2, 0, -1, -1, -1, -1},
    {1, 9, 0, 10, 2, 3, 10, 3, 5, 5, 3, 7, -1, -1, -1, -1},
    {7, 5, 10, 7, 10, 8, 8, 10, 2, 8, 2, 1, 8, 1, 9, -1},
    {7, 5, 1, 7, 1, 3, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {8, 1, 0, 8, 7, 1, 1, 7, 5, -1, -1, -1, -1, -1, -1, -1},
    {0, 5, 9, 0, 3, 5, 5, 3, 7, -1, -1, -1, -1, -1, -1, -1},
    {7, 5, 9, 7, 9, 8, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {4, 5, 10, 4, 10, 8, 8, 10, 11, -1, -1, -1, -1, -1, -1, -1},
    {11, 3, 10, 10, 4, 5, 10, 3, 4, 4, 3, 0, -1, -1, -1, -1},
    {9, 0, 1, 4, 5, 10, 4, 10, 8, 8, 10, 11, -1, -1, -1, -1},
    {3, 1, 9, 3, 9, 11, 11, 9, 4, 11, 4, 5, 11, 5, 10, -1},
    {8, 4, 11, 11, 1, 2, 4, 1, 11, 4, 5, 1, -1, -1, -1, -1},
    {5, 1, 2, 5, 2, 4, 4, 2, 11, 4, 11, 3, 4, 3, 0, -1},
    {11, 8, 4, 11, 4, 2, 2, 4, 5, 2, 5, 9, 2, 9, 0, -1},
    {2, 11, 3, 5, 9, 4, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {4, 5, 10, 4, 10, 2, 4, 2, 8, 8, 2, 3, -1, -1, -1, -1},
    {10, 4, 5, 10, 2, 4, 4, 2, 0, -1, -1, -1, -1, -1, -1, -1},
    {0, 1, 9, 8, 2, 3, 8, 4, 2, 2, 4, 10, 10, 4, 5, -1},
    {10, 2, 5, 2, 4, 5, 2, 9, 4, 2, 1, 9, -1, -1, -1, -1},
    {4, 3, 8, 4, 5, 3, 3, 5, 1, -1, -1, -1, -1, -1, -1, -1},
    {0, 4, 5, 0, 5, 1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {0, 3, 9, 3, 5, 9, 3, 4, 5, 3, 8, 4, -1, -1, -1, -1},
    {4, 5, 9, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {7, 4, 9, 7, 9, 11, 11, 9, 10, -1, -1, -1, -1, -1, -1, -1},
    {8, 3, 0, 7, 4, 9, 7, 9, 11, 11, 9, 10, -1, -1, -1, -1},
    {0, 1, 4, 4, 11, 7, 1, 11, 4, 1, 10, 11, -1, -1, -1, -1},
    {10, 11, 7, 10, 7, 1, 1, 7, 4, 1, 4, 8, 1, 8, 3, -1},
    {2, 11, 7, 2, 7, 4, 2, 4, 1, 1, 4, 9, -1, -1, -1, -1},
    {0, 8, 3, 1, 4, 9, 1, 2, 4, 4, 2, 7, 7, 2, 11, -1},
    {7, 2, 11, 7, 4, 2, 2, 4, 0, -1, -1, -1, -1, -1, -1, -1},
    {7, 4, 11, 4, 2, 11, 4, 3, 2, 4, 8, 3, -1, -1, -1, -1},
    {7, 4, 3, 3, 10, 2, 3, 4, 10, 10, 4, 9, -1, -1, -1, -1},
    {2, 0, 8, 2, 8, 10, 10, 8, 7, 10, 7, 4, 10, 4, 9, -1},
    {4, 0, 1, 4, 1, 7, 7, 1, 10, 7, 10, 2, 7, 2, 3, -1},
    {4, 8, 7, 1, 10, 2, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {9, 7, 4, 9, 1, 7, 7, 1, 3, -1, -1, -1, -1, -1, -1, -1},
    {8, 7, 0, 7, 1, 0, 7, 9, 1, 7, 4, 9, -1, -1, -1, -1},
    {4, 0, 3, 4, 3, 7, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {4, 8, 7, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {8, 9, 10, 8, 10, 11, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {0, 11, 3, 0, 9, 11, 11, 9, 10, -1, -1, -1, -1, -1, -1, -1},
    {1, 8, 0, 1, 10, 8, 8, 10, 11, -1, -1, -1, -1, -1, -1, -1},
    {3, 1, 10, 3, 10, 11, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {2, 9, 1, 2, 11, 9, 9, 11, 8, -1, -1, -1, -1, -1, -1, -1},
    {0, 9, 3, 9, 11, 3, 9, 2, 11, 9, 1, 2, -1, -1, -1, -1},
    {11, 8, 0, 11, 0, 2, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {2, 11, 3, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {3, 10, 2, 3, 8, 10, 10, 8, 9, -1, -1, -1, -1, -1, -1, -1},
    {9, 10, 2, 9, 2, 0, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {3, 8, 2, 8, 10, 2, 8, 1, 10, 8, 0, 1, -1, -1, -1, -1},
    {2, 1, 10, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {8, 9, 1, 8, 1, 3, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {1, 0, 9, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {0, 3, 8, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {-1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
};

}  // namespace

namespace {

// Key for a lattice edge: endpoint index * 3 + axis.
inline uint64_t edge_key(const VoxelGrid& g, int x, int y, int z, int axis) {
  const uint64_t idx = (uint64_t(z) * uint64_t(g.ny) + uint64_t(y)) * uint64_t(g.nx) +
                       uint64_t(x);
  return idx * 3 + uint64_t(axis);
}

struct CellWalker {
  const VoxelGrid& grid;
  double threshold;
  std::unordered_map<uint64_t, int> edge_vertex;
  TriMesh mesh;

  explicit CellWalker(const VoxelGrid& g, double t) : grid(g), threshold(t) {}

  int vertex_on_edge(int x, int y, int z, int corner_a, int corner_b) {
    int ax = x + kCorner[corner_a][0], ay = y + kCorner[corner_a][1],
        az = z + kCorner[corner_a][2];
    int bx = x + kCorner[corner_b][0], by = y + kCorner[corner_b][1],
        bz = z + kCorner[corner_b][2];
    // Canonical direction: lower lattice index first.
    if (std::tie(az, ay, ax) > std::tie(bz, by, bx)) {
      std::swap(ax, bx);
      std::swap(ay, by);
      std::swap(az, bz);
    }
    const int axis = bx != ax ? 0 : by != ay ? 1 : 2;
    const uint64_t key = edge_key(grid, ax, ay, az, axis);
    const auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;

    const double va = grid.at(ax, ay, az);
    const double vb = grid.at(bx, by, bz);
    const double t = std::clamp((threshold - va) / (vb - va), 0.0, 1.0);
    const Vec3 p = grid.point(ax, ay, az) * (1.0 - t) + grid.point(bx, by, bz) * t;
    const int id = int(mesh.vertices.size());
    mesh.vertices.push_back(p);
    edge_vertex.emplace(key, id);
    return id;
  }

  void run() {
    for (int z = 0; z + 1 < grid.nz; ++z)
      for (int y = 0; y + 1 < grid.ny; ++y)
        for (int x = 0; x + 1 < grid.nx; ++x) {
          int index = 0;
          for (int v = 0; v < 8; ++v) {
            const double val =
                grid.at(x + kCorner[v][0], y + kCorner[v][1], z + kCorner[v][2]);
            if (val <= threshold) index |= 1 << v;  // bit set = outside
          }
          const int8_t* tri = kTriTable[index];
          for (int t = 0; tri[t] != -1; t += 3) {
            const int a = vertex_on_edge(x, y, z, kEdge[tri[t]][0], kEdge[tri[t]][1]);
            const int b =
                vertex_on_edge(x, y, z, kEdge[tri[t + 1]][0], kEdge[tri[t + 1]][1]);
            const int c =
                vertex_on_edge(x, y, z, kEdge[tri[t + 2]][0], kEdge[tri[t + 2]][1]);
            if (a == b || b == c || a == c) continue;  // degenerate sliver
            mesh.faces.push_back({a, b, c});
          }
        }
  }
};

}  // namespace

TriMesh marching_cubes(const VoxelGrid& grid, double threshold) {
  if (grid.nx < 2 || grid.ny < 2 || grid.nz < 2)
    throw Error("marching_cubes: grid must be at least 2^3");
  CellWalker walker(grid, threshold);
  walker.run();
  if (walker.mesh.faces.empty())
    throw EmptySurfaceError("marching_cubes: no edge crosses the threshold");
  compute_vertex_normals(walker.mesh);
  return walker.mesh;
}

TriMesh marching_cubes_field(const std::function<double(const Vec3&)>& fn,
                             const CanonicalBox& box, int res, double threshold,
                             int refine_steps) {
  VoxelGrid grid = VoxelGrid::over_box(box, res);
  for (int z = 0; z < res; ++z)
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x) grid.at(x, y, z) = fn(grid.point(x, y, z));
  TriMesh mesh = marching_cubes(grid, threshold);

  if (refine_steps > 0) {
    // Each vertex lies on a lattice edge; bisect the true field along it.
    const double h = grid.spacing;
    for (auto& v : mesh.vertices) {
      // Recover the edge direction from the fractional lattice coordinate.
      const Vec3 local = (v - grid.origin) / h;
      int axis = -1;
      for (int a = 0; a < 3; ++a) {
        const double frac = local[a] - std::round(local[a]);
        if (std::abs(frac) > 1e-9) axis = a;
      }
      if (axis < 0) continue;
      Vec3 lo = v, hi = v;
      lo[axis] = grid.origin[axis] + h * std::floor(local[axis]);
      hi[axis] = lo[axis] + h;
      double flo = fn(lo), fhi = fn(hi);
      if ((flo > threshold) == (fhi > threshold)) continue;
      for (int it = 0; it < refine_steps; ++it) {
        Vec3 mid = 0.5 * (lo + hi);
        const double fm = fn(mid);
        if ((fm > threshold) == (flo > threshold)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
          fhi = fm;
        }
      }
      v = 0.5 * (lo + hi);
    }
    compute_vertex_normals(mesh);
  }
  return mesh;
}

}  // namespace ava
