#ifndef CASC_RNG_HPP
#define CASC_RNG_HPP

#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace casc {

// Seeded generator with hand-rolled transforms, so that identical seeds
// give identical streams regardless of the standard library's
// distribution implementations.
struct rng {

    std::mt19937_64 gen;

    explicit rng(std::uint64_t seed)
        : gen(seed)
    {}

    // uniform in [0, 1)
    double uniform()
    {
        return double(gen() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b)
    {
        assert(a <= b);
        return a + (b - a) * uniform();
    }

    // uniform integer in [a, b] inclusive
    int uniform_int(int a, int b)
    {
        assert(a <= b);
        std::uint64_t span = std::uint64_t(b) - std::uint64_t(a) + 1;
        return int(a + std::int64_t(gen() % span));
    }

    // standard normal via Box-Muller
    double normal()
    {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * M_PI * u2);
    }

    // geometric count >= 1 with the given mean, via inverse cdf
    int geometric(double mean)
    {
        assert(mean >= 1);
        double p = 1.0 / mean;
        if (p >= 1) {
            return 1;
        }
        double u = uniform();
        return 1 + int(std::floor(std::log1p(-u) / std::log1p(-p)));
    }

    template <class T>
    void shuffle(std::vector<T>& v)
    {
        for (int i = int(v.size()) - 1; i > 0; --i) {
            int j = uniform_int(0, i);
            std::swap(v[i], v[j]);
        }
    }

    std::vector<int> permutation(int n)
    {
        std::vector<int> p(n);
        for (int i = 0; i < n; ++i) {
            p[i] = i;
        }
        shuffle(p);
        return p;
    }

};

}

#endif
