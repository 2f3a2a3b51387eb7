#pragma once

// Deterministic CSV emission. Doubles are printed with %.12g so reruns of the
// same experiment are byte-identical; column headers carry units so the files
// are self-describing for plotting.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace igesim {

inline std::string csv_num(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

inline std::string csv_num(long value) { return std::to_string(value); }
inline std::string csv_num(int value) { return std::to_string(value); }
inline std::string csv_num(std::uint64_t value) { return std::to_string(value); }

class CsvFile {
  public:
    CsvFile(const std::string& path, const std::vector<std::string>& header) : path_(path) {
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_) throw IoError("cannot open for writing: " + path);
        row(header);
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
        if (!out_) throw IoError("write failed: " + path_);
    }

    void close() {
        out_.close();
        if (out_.fail()) throw IoError("close failed: " + path_);
    }

  private:
    std::string path_;
    std::ofstream out_;
};

} // namespace igesim
