#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sentitrade/date.hpp"

namespace sentitrade {

enum class ColumnKind { Continuous, Dummy };

/// How an indicator responds when every price (O, H, L, C) of the traded
/// series is multiplied by a positive factor. Volume and the other
/// currency's series are left alone.
enum class ScaleClass {
    Invariant,  // f(λx) = f(x)
    Linear,     // f(λx) = λ f(x)
    Quadratic,  // f(λx) = λ² f(x)
};

/// One computed feature over a date axis. Values before `valid_from` belong
/// to the warm-up region and are NaN; everything from `valid_from` on is
/// finite.
struct IndicatorColumn {
    std::string name;
    std::vector<Date> dates;
    std::vector<double> values;
    std::size_t valid_from = 0;
    ColumnKind kind = ColumnKind::Continuous;
    ScaleClass scale = ScaleClass::Invariant;

    bool valid(std::size_t i) const { return i >= valid_from && i < values.size(); }
};

}  // namespace sentitrade
