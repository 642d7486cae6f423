#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace contagion {

// All floats go out with 17 significant digits, '.' decimal separator,
// locale-independent.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open output file '" + path + "'");
    }

    void header(const std::vector<std::string>& names) { line(names); }

    void line(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out_ << ',';
            out_ << fmt17(values[i]);
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

struct ReturnsCsv {
    std::vector<std::string> column_names; // asset columns (first input column is time)
    std::vector<std::string> time_labels;
    std::vector<std::vector<double>> columns; // one series per asset column
};

// Header row required; first column is an ISO-8601 date or a numeric time
// label, remaining columns are simple returns.
ReturnsCsv read_returns_csv(const std::string& path);

} // namespace contagion
