#include "contagion/csv.hpp"

#include <cmath>

namespace contagion {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

ReturnsCsv read_returns_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open returns CSV '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("returns CSV is empty: " + path);
    const std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 2) {
        throw std::runtime_error("returns CSV needs a time column and at least one asset column");
    }
    ReturnsCsv out;
    out.column_names.assign(header.begin() + 1, header.end());
    out.columns.assign(out.column_names.size(), {});
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw std::runtime_error("returns CSV row " + std::to_string(line_no) +
                                     " has wrong column count");
        }
        out.time_labels.push_back(cells[0]);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            double v;
            try {
                v = std::stod(cells[c]);
            } catch (...) {
                throw std::runtime_error("returns CSV row " + std::to_string(line_no) +
                                         ": cannot parse '" + cells[c] + "'");
            }
            if (!std::isfinite(v)) {
                throw std::runtime_error("returns CSV row " + std::to_string(line_no) +
                                         ": non-finite value");
            }
            out.columns[c - 1].push_back(v);
        }
    }
    return out;
}

} // namespace contagion
