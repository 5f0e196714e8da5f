#pragma once

#include <pepf/dataset.hpp>
#include <pepf/time.hpp>

#include <chrono>
#include <vector>

namespace testing {

inline std::vector<pepf::Timestamp> hourly(std::size_t n, long start = 1577836800) {
    std::vector<pepf::Timestamp> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(pepf::Timestamp{std::chrono::seconds{start + static_cast<long>(3600 * i)}});
    return out;
}

inline pepf::dataset::SeriesFrame frame_of(std::vector<double> target) {
    const auto n = target.size();
    return pepf::dataset::SeriesFrame(hourly(n), "price", std::move(target));
}

} // namespace testing
