#pragma once

#include <array>
#include <cstdint>

namespace epicohort {

struct StateCounts {
    std::int64_t deaths;
    std::int64_t positives;
};

/// Published federal counts as of 2020-08-01, by INEGI state code (index 0 is
/// state 1). Used to build reference fixtures.
inline constexpr std::array<StateCounts, 32> kNationalByState = {{
    {257, 4120},
    {2674, 13594},
    {182, 4498},
    {500, 4588},
    {645, 13116},
    {194, 1875},
    {7244, 74314},
    {967, 5775},
    {904, 5317},
    {288, 4167},
    {1009, 21378},
    {1415, 11032},
    {1033, 6901},
    {1549, 13313},
    {8225, 53513},
    {780, 9910},
    {836, 4101},
    {391, 3518},
    {1118, 18032},
    {968, 10673},
    {2446, 20355},
    {449, 3726},
    {1015, 7840},
    {522, 9921},
    {2230, 12774},
    {1949, 17890},
    {1988, 21747},
    {1008, 17130},
    {713, 4627},
    {2849, 21582},
    {875, 10098},
    {249, 2768},
}};
inline constexpr StateCounts kNationalTotal = {47472, 434193};

/// Same snapshot, restricted to speakers of an indigenous language.
inline constexpr std::array<StateCounts, 32> kIndigenousByState = {{
    {0, 8},
    {0, 81},
    {0, 6},
    {1, 124},
    {0, 23},
    {0, 7},
    {5, 149},
    {3, 45},
    {2, 318},
    {4, 28},
    {0, 45},
    {5, 228},
    {4, 257},
    {3, 41},
    {9, 329},
    {0, 138},
    {1, 38},
    {0, 54},
    {0, 41},
    {18, 410},
    {1, 200},
    {0, 9},
    {2, 253},
    {0, 276},
    {0, 31},
    {1, 116},
    {0, 127},
    {0, 19},
    {0, 30},
    {1, 131},
    {7, 979},
    {0, 14},
}};
inline constexpr StateCounts kIndigenousTotal = {67, 4555};

}  // namespace epicohort
