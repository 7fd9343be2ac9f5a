#pragma once

// Small CSV helpers shared by the exporters and the CLI: a dense
// complex-matrix schema ("row,col,re,im") used for reduced density matrices,
// and a plain cell reader for loading result tables back. All numeric output
// goes through the %.17g round-trip format; none of the schemas ever quote
// cells, so the reader splits on bare commas.

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mflab/common.hpp"

namespace mflab {

inline void write_matrix_csv(std::ostream& os, const Mat& m) {
    os << "row,col,re,im\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            os << r << ',' << c << ',' << fmt_full(m(r, c).real()) << ',' << fmt_full(m(r, c).imag())
               << '\n';
}

inline Mat read_matrix_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "row,col,re,im")
        throw std::invalid_argument("read_matrix_csv: missing header");
    struct Entry {
        Eigen::Index r, c;
        cxd v;
    };
    std::vector<Entry> entries;
    Eigen::Index rows = 0, cols = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        for (char& ch : line)
            if (ch == ',') ch = ' ';
        std::istringstream ss(line);
        Entry e;
        double re, im;
        if (!(ss >> e.r >> e.c >> re >> im))
            throw std::invalid_argument("read_matrix_csv: bad row: " + line);
        e.v = cxd(re, im);
        rows = std::max(rows, e.r + 1);
        cols = std::max(cols, e.c + 1);
        entries.push_back(e);
    }
    if (entries.empty()) throw std::invalid_argument("read_matrix_csv: no data rows");
    Mat m = Mat::Zero(rows, cols);
    for (const Entry& e : entries) m(e.r, e.c) = e.v;
    return m;
}

// header plus unquoted cells; blank lines are skipped
inline std::vector<std::vector<std::string>> read_csv_cells(std::istream& is) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        size_t start = 0;
        while (true) {
            size_t pos = line.find(',', start);
            if (pos == std::string::npos) {
                cells.push_back(line.substr(start));
                break;
            }
            cells.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace mflab
