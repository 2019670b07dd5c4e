#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace gexlab {

/// One verification outcome. `reference` is NaN when a check has no target
/// value (pure inequality suites).
struct CheckRow {
    std::string check;
    std::string fixture;
    double value = 0.0;
    double reference = NAN;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
};

class Report {
public:
    void add(CheckRow row) { rows_.push_back(std::move(row)); }
    void merge(const Report& other) { rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end()); }

    bool passed() const;
    const std::vector<CheckRow>& rows() const { return rows_; }
    const CheckRow* find(std::string_view check, std::string_view fixture = {}) const;

    /// Header `check,fixture,value,reference,tolerance,pass`; +inf as "inf".
    std::string to_csv() const;
    /// One line per row plus an overall verdict.
    std::string summary() const;

private:
    std::vector<CheckRow> rows_;
};

}  // namespace gexlab
