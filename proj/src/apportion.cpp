#include "coreselect/apportion.hpp"

#include "coreselect/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace coreselect {

std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

std::vector<std::size_t> largest_remainder(std::span<const double> weights, std::size_t total) {
    require(!weights.empty(), Errc::parameter, "largest_remainder: no weights");
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    require(sum > 0.0, Errc::parameter, "largest_remainder: weights sum to zero");

    std::vector<std::size_t> counts(weights.size());
    std::vector<double> remainder(weights.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        require(weights[i] >= 0.0, Errc::parameter, "largest_remainder: negative weight");
        const double exact = static_cast<double>(total) * weights[i] / sum;
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        remainder[i] = exact - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    // Round-off can push the floors one past the total.
    while (assigned > total) {
        auto it = std::max_element(counts.begin(), counts.end());
        --*it;
        --assigned;
    }

    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < total; i = (i + 1) % order.size()) {
        ++counts[order[i]];
        ++assigned;
    }
    return counts;
}

std::vector<std::size_t> water_fill(std::span<const std::size_t> capacity, std::size_t total,
                                    std::vector<std::size_t> initial) {
    const std::size_t n = capacity.size();
    if (initial.empty()) initial.assign(n, 0);
    require(initial.size() == n, Errc::parameter, "water_fill: initial/capacity length mismatch");

    std::size_t room = 0;
    for (std::size_t i = 0; i < n; ++i) {
        require(initial[i] <= capacity[i], Errc::parameter, "water_fill: initial count above capacity");
        room += capacity[i] - initial[i];
    }
    require(total <= room, Errc::size, "water_fill: not enough capacity for the requested total");

    auto counts = std::move(initial);
    std::size_t outstanding = total;
    while (outstanding > 0) {
        std::vector<std::size_t> open;
        for (std::size_t i = 0; i < n; ++i)
            if (counts[i] < capacity[i]) open.push_back(i);

        const std::size_t share = outstanding / open.size();
        if (share > 0) {
            for (std::size_t i : open) {
                const std::size_t take = std::min(share, capacity[i] - counts[i]);
                counts[i] += take;
                outstanding -= take;
            }
            continue;
        }
        // Fewer units than open bins: one each, most remaining room first.
        std::stable_sort(open.begin(), open.end(), [&](std::size_t a, std::size_t b) {
            return capacity[a] - counts[a] > capacity[b] - counts[b];
        });
        for (std::size_t i = 0; i < outstanding; ++i) ++counts[open[i]];
        outstanding = 0;
    }
    return counts;
}

}  // namespace coreselect
