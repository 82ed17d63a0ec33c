#pragma once

namespace sdfuse::mc {

// Cell corner offsets matching the tables: bottom quad 0-3 in the
// xz-plane, top quad 4-7 at +y. Every cube edge is axis-aligned.
inline constexpr int kCorner[8][3] = {
    {0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1},
    {0, 1, 0}, {1, 1, 0}, {1, 1, 1}, {0, 1, 1},
};

// Edge k connects corners kEdgeEnds[k][0] and kEdgeEnds[k][1].
inline constexpr int kEdgeEnds[12][2] = {
    {0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
    {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7},
};

extern const int kEdgeTable[256];
extern const int kTriTable[256][16];

}  // namespace sdfuse::mc
