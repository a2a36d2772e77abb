#include "ofsim/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace ofsim::report {

namespace {

using exp::format_number;

bool parse_double(const std::string& s, double& v)
{
    if (s.empty()) return false;
    try {
        std::size_t used = 0;
        v = std::stod(s, &used);
        return used == s.size() && std::isfinite(v);
    } catch (const std::exception&) {
        return false;
    }
}

bool row_ok(const Table& t, const std::vector<std::string>& r)
{
    return !t.has("status") || r[t.column("status")] == "ok";
}

std::string cell(const Table& t, const std::vector<std::string>& r, const std::string& col)
{
    return t.has(col) ? r[t.column(col)] : std::string();
}

std::string escape_xml(const std::string& s)
{
    std::string o;
    for (char c : s) {
        switch (c) {
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '&': o += "&amp;"; break;
            case '"': o += "&quot;"; break;
            default: o += c;
        }
    }
    return o;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

// Columns that identify an operating point, in output order.
const std::vector<std::string> kKeyColumns{"file",        "source",          "lo_linewidth_hz", "order",
                                           "entropy_bits", "launch_power_dbm", "distance_km",     "snr_db"};

}  // namespace

Table merge(const std::vector<std::pair<std::string, Table>>& files)
{
    if (files.empty()) throw Error("report: no input files");
    Table out;
    out.header.push_back("file");
    const auto& h0 = files.front().second.header;
    out.header.insert(out.header.end(), h0.begin(), h0.end());
    for (const auto& [name, t] : files) {
        if (t.header != h0)
            throw Error("report: '" + name + "' has a different header than '" + files.front().first + "'");
        for (const auto& r : t.rows) {
            std::vector<std::string> row{name};
            row.insert(row.end(), r.begin(), r.end());
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

std::string value_column(const Table& t)
{
    for (const char* c : {"snr_db", "a_nli_db_per_mw2", "gmi_bits"})
        if (t.has(c) && !(std::string(c) == "snr_db" && t.has("gmi_bits"))) return c;
    throw Error("report: no value column (snr_db, a_nli_db_per_mw2 or gmi_bits)");
}

Table scheme_delta(const Table& merged)
{
    if (!merged.has("scheme")) throw Error("report: scheme comparison needs a scheme column");
    const std::string value = value_column(merged);
    std::vector<std::string> keys;
    for (const auto& k : kKeyColumns) {
        if (!merged.has(k) || k == value) continue;
        // At the nonlinear threshold each scheme has its own launch power.
        if (k == "launch_power_dbm" && merged.has("source")) continue;
        keys.push_back(k);
    }
    auto key_of = [&](const std::vector<std::string>& r) {
        std::string s;
        for (const auto& k : keys) s += r[merged.column(k)] + '\x1f';
        return s;
    };
    std::map<std::string, double> sc;
    for (const auto& r : merged.rows) {
        double v;
        if (r[merged.column("scheme")] == "SC" && row_ok(merged, r) && parse_double(r[merged.column(value)], v))
            sc[key_of(r)] = v;
    }
    Table out;
    out.header = keys;
    for (const char* c : {"scheme", "value_column", "sc_value", "value", "delta_vs_sc"}) out.header.push_back(c);
    for (const auto& r : merged.rows) {
        const std::string scheme = r[merged.column("scheme")];
        double v;
        if (scheme == "SC" || !row_ok(merged, r) || !parse_double(r[merged.column(value)], v)) continue;
        auto it = sc.find(key_of(r));
        if (it == sc.end()) continue;
        std::vector<std::string> row;
        for (const auto& k : keys) row.push_back(r[merged.column(k)]);
        for (auto x : {scheme, value, format_number(it->second), format_number(v), format_number(v - it->second)})
            row.push_back(x);
        out.rows.push_back(std::move(row));
    }
    return out;
}

Table file_delta(const std::vector<std::pair<std::string, Table>>& files)
{
    merge(files);
    const auto& ref = files.front().second;
    const std::string value = value_column(ref);
    const std::size_t vc = ref.column(value);
    std::vector<std::string> ids;
    for (const auto& k : {"scheme", "source", "lo_linewidth_hz", "entropy_bits", "launch_power_dbm", "distance_km",
                          "snr_db"})
        if (ref.has(k) && k != value) ids.push_back(k);
    Table out;
    out.header = {"file", "row"};
    out.header.insert(out.header.end(), ids.begin(), ids.end());
    for (const char* c : {"value_column", "reference", "value", "delta"}) out.header.push_back(c);
    for (std::size_t f = 1; f < files.size(); ++f) {
        const auto& t = files[f].second;
        if (t.rows.size() != ref.rows.size())
            throw Error("report: '" + files[f].first + "' has a different number of rows than '" +
                        files.front().first + "'");
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            std::vector<std::string> row{files[f].first, std::to_string(i + 1)};
            for (const auto& k : ids) {
                const std::size_t c = ref.column(k);
                if (t.rows[i][c] != ref.rows[i][c])
                    throw Error("report: row " + std::to_string(i + 1) + " of '" + files[f].first +
                                "' is a different operating point");
                row.push_back(ref.rows[i][c]);
            }
            double a, b;
            const bool ok = parse_double(ref.rows[i][vc], a) && parse_double(t.rows[i][vc], b);
            row.push_back(value);
            row.push_back(ref.rows[i][vc]);
            row.push_back(t.rows[i][vc]);
            row.push_back(ok ? format_number(b - a) : "");
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

std::string svg_line_plot(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                          const std::string& y_label)
{
    const double w = 720, h = 480, ml = 70, mr = 180, mt = 40, mb = 55;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (w - ml - mr); };
    auto py = [&](double y) { return h - mb - (y - y0) / (y1 - y0) * (h - mt - mb); };
    auto num = [](double v) {
        std::ostringstream s;
        s.precision(4);
        s << v;
        return s.str();
    };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(title)
      << "</text>\n";
    o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr << "\" height=\"" << h - mt - mb
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = x0 + (x1 - x0) * i / 5.0, yv = y0 + (y1 - y0) * i / 5.0;
        o << "<text x=\"" << px(xv) << "\" y=\"" << h - mb + 18 << "\" text-anchor=\"middle\">" << num(xv)
          << "</text>\n";
        o << "<text x=\"" << ml - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << num(yv)
          << "</text>\n";
        o << "<line x1=\"" << ml << "\" x2=\"" << w - mr << "\" y1=\"" << py(yv) << "\" y2=\"" << py(yv)
          << "\" stroke=\"#ddd\"/>\n";
    }
    o << "<text x=\"" << ml + (w - ml - mr) / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">"
      << escape_xml(x_label) << "</text>\n";
    o << "<text transform=\"translate(16," << mt + (h - mt - mb) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape_xml(y_label) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % (sizeof kPalette / sizeof *kPalette)];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) o << (i ? " " : "") << px(s.x[i]) << "," << py(s.y[i]);
        o << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"2.5\" fill=\"" << color
              << "\"/>\n";
        const double ly = mt + 14 + 18.0 * static_cast<double>(k);
        o << "<line x1=\"" << w - mr + 10 << "\" x2=\"" << w - mr + 30 << "\" y1=\"" << ly - 4 << "\" y2=\""
          << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << w - mr + 36 << "\" y=\"" << ly << "\">" << escape_xml(s.label) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::string plot_results(const Table& t, const std::string& title)
{
    std::string xc, yc;
    if (t.has("gmi_bits")) {
        xc = "snr_db";
        yc = "gmi_bits";
    } else if (t.has("a_nli_db_per_mw2")) {
        xc = "distance_km";
        yc = "a_nli_db_per_mw2";
    } else if (t.has("distance_km")) {
        xc = "distance_km";
        yc = "snr_db";
    } else {
        xc = "m_subcarriers";
        yc = "snr_db";
    }
    std::vector<std::string> group;
    for (const char* c : {"file", "scheme", "source", "lo_linewidth_hz", "launch_power_dbm", "entropy_bits"})
        if (t.has(c) && c != xc && !(std::string(c) == "launch_power_dbm" && t.has("source"))) group.push_back(c);
    std::vector<Series> series;
    std::map<std::string, std::size_t> index;
    for (const auto& r : t.rows) {
        double x, y;
        if (!row_ok(t, r) || !parse_double(r[t.column(xc)], x) || !parse_double(r[t.column(yc)], y)) continue;
        std::string label;
        for (const auto& g : group) {
            const std::string v = cell(t, r, g);
            if (v.empty()) continue;
            label += (label.empty() ? "" : " ") + (g == "scheme" || g == "source" || g == "file" ? v : g + "=" + v);
        }
        if (label.empty()) label = yc;
        auto [it, fresh] = index.emplace(label, series.size());
        if (fresh) series.push_back({label, {}, {}});
        series[it->second].x.push_back(x);
        series[it->second].y.push_back(y);
    }
    return svg_line_plot(series, title, xc, yc);
}

}  // namespace ofsim::report
