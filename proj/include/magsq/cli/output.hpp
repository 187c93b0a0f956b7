#pragma once

// Locale-independent number formatting, CSV tables and a minimal SVG line plot.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "../core.hpp"

namespace magsq::cli {

/// 17 significant digits, "nan"/"inf" for non-finite.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<std::string> cells) {
        if (cells.size() != header_.size()) throw Error(ErrorKind::domain, "csv: row width mismatch");
        rows_.push_back(std::move(cells));
    }

    void add_numbers(const std::vector<double>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values) cells.push_back(format_number(v));
        add_row(std::move(cells));
    }

    std::size_t size() const { return rows_.size(); }
    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }

    std::string str() const {
        std::string out;
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += cells[i];
            }
            out += '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Writes files into an output directory and removes everything it wrote
/// (and the directory, if it created it) unless commit() is called.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;

    ~OutputSet() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& f : written_) std::filesystem::remove(f, ec);
        if (created_dir_) std::filesystem::remove(dir_, ec);
    }

    void write(const std::string& name, const std::string& content) {
        ensure_dir();
        const auto path = dir_ / name;
        written_.push_back(path);
        std::ofstream os(path, std::ios::binary);
        os << content;
        if (!os) throw std::runtime_error("cannot write " + path.string());
    }

    const std::vector<std::filesystem::path>& files() const { return written_; }
    const std::filesystem::path& dir() const { return dir_; }
    void commit() { committed_ = true; }

private:
    void ensure_dir() {
        if (std::filesystem::exists(dir_)) return;
        std::filesystem::create_directories(dir_);
        created_dir_ = true;
    }

    std::filesystem::path dir_;
    std::vector<std::filesystem::path> written_;
    bool created_dir_ = false;
    bool committed_ = false;
};

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Static SVG line plot with linear axes; non-finite points break the line.
inline std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                                 const std::vector<Series>& series) {
    constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    auto f = [](double v) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
        return std::string(buf, res.ptr);
    };
    auto tick = [](double v) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 4);
        return std::string(buf, res.ptr);
    };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << f(W / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0;
        const double yv = y0 + (y1 - y0) * k / 4.0;
        os << "<text x=\"" << f(px(xv)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
           << tick(xv) << "</text>\n";
        os << "<text x=\"" << L - 4 << "\" y=\"" << f(py(yv) + 3) << "\" text-anchor=\"end\" font-size=\"10\">"
           << tick(yv) << "</text>\n";
    }
    os << "<text x=\"" << f(L + (W - L - R) / 2) << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << x_label << "</text>\n";
    os << "<text x=\"16\" y=\"" << f(T + (H - T - B) / 2) << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
       << f(T + (H - T - B) / 2) << ")\">" << y_label << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = colors[k % 6];
        std::string path;
        bool pen = false;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                pen = false;
                continue;
            }
            path += (pen ? " L" : " M") + f(px(s.x[i])) + "," + f(py(s.y[i]));
            pen = true;
        }
        if (!path.empty())
            os << "<path d=\"" << path.substr(1) << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
        const double ly = T + 14 + 16 * static_cast<double>(k);
        os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << f(ly) << "\" x2=\"" << W - R + 30 << "\" y2=\"" << f(ly)
           << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << W - R + 34 << "\" y=\"" << f(ly + 4) << "\" font-size=\"11\">" << s.label << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace magsq::cli
