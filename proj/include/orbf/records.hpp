#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

namespace orbf {

/// One prediction made at time index t for the response at t + horizon.
struct ForecastRecord {
    std::string target_id;
    std::string model_id;
    std::size_t horizon = 1;
    std::int64_t t = 0;
    double y_hat = 0.0;
    std::optional<double> y_realized;

    bool resolved() const { return y_realized.has_value(); }
};

} // namespace orbf
