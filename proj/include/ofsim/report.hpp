#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ofsim/experiment.hpp"

namespace ofsim::report {

using exp::Table;

/// Concatenates result tables that share one header, prefixing a `file`
/// column. Throws Error on a header mismatch.
Table merge(const std::vector<std::pair<std::string, Table>>& files);

/// Name of the column compared across rows: the first present of snr_db,
/// a_nli_db_per_mw2 and gmi_bits.
std::string value_column(const Table& t);

/// Every non-SC row against the SC row with the same operating point.
Table scheme_delta(const Table& merged);

/// Row-by-row difference of each file's value column against the first file.
/// Files must have the same rows in the same order.
Table file_delta(const std::vector<std::pair<std::string, Table>>& files);

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Self-contained SVG line plot.
std::string svg_line_plot(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                          const std::string& y_label);

/// Picks axes and series from a result table of any scenario and plots it.
std::string plot_results(const Table& t, const std::string& title);

}  // namespace ofsim::report
