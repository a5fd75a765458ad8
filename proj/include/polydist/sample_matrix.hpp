#pragma once

#include "polydist/types.hpp"

namespace polydist {

// Batch of i.i.d. draws of the vector sequence (X_1, ..., X_{n_max}), X_n in R^N.
// Row = draw, column = (n-1)*N + (j-1).
struct SampleMatrix {
    Index count = 0;
    int n_max = 0;
    int N = 1;
    ArrayXXd values;

    Index col(int n, int j) const { return Index(n - 1) * N + (j - 1); }
    double at(Index draw, int n, int j) const { return values(draw, col(n, j)); }
};

}  // namespace polydist
