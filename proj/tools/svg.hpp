#pragma once

#include "cpo/types.hpp"

#include <string>
#include <vector>

namespace cpo::svg {

struct Series {
    std::string label;
    std::string color;
    Points points; // 2 x n
    double radius{2.0};
};

/// Vertical bars; each bar carries its value in a data-value attribute.
std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                      const std::vector<double>& values);

/// 2-D scatter of several series on shared axes.
std::string scatter(const std::string& title, const std::vector<Series>& series);

} // namespace cpo::svg
