#include "nesp/dataset.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nesp/rng.hpp"

namespace nesp {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw DataError(path + ": " + what);
}

std::uint32_t read_be32(std::istream& in, const std::string& path, const char* field) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) fail(path, std::string("truncated before ") + field);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

std::uint64_t read_le64(std::istream& in, const std::string& path, const char* field) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) fail(path, std::string("truncated before ") + field);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

void write_le64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

} // namespace

MatrixFormat format_from_name(const std::string& name) {
    if (name == "csv") return MatrixFormat::Csv;
    if (name == "idx-images") return MatrixFormat::IdxImages;
    if (name == "raw-f32") return MatrixFormat::RawF32;
    throw UsageError("unknown matrix format: " + name);
}

std::string format_name(MatrixFormat fmt) {
    switch (fmt) {
        case MatrixFormat::Csv: return "csv";
        case MatrixFormat::IdxImages: return "idx-images";
        case MatrixFormat::RawF32: return "raw-f32";
    }
    return "?";
}

Matrix gen_gaussian_chain(std::size_t n_clusters, std::size_t per_cluster,
                          std::size_t dim, double spacing, std::uint64_t seed) {
    if (n_clusters == 0 || per_cluster == 0 || dim == 0)
        throw UsageError("gen_gaussian_chain: empty shape");
    Matrix out(n_clusters * per_cluster, dim);
    for (std::size_t c = 0; c < n_clusters; ++c) {
        Rng rng = Rng::stream(seed, c);
        const double center = spacing * static_cast<double>(c);
        for (std::size_t p = 0; p < per_cluster; ++p) {
            double* row = out.row(c * per_cluster + p);
            for (std::size_t d = 0; d < dim; ++d) row[d] = rng.normal();
            row[0] += center;
        }
    }
    return out;
}

std::vector<int> chain_labels(std::size_t n_clusters, std::size_t per_cluster) {
    std::vector<int> labels;
    labels.reserve(n_clusters * per_cluster);
    for (std::size_t c = 0; c < n_clusters; ++c)
        labels.insert(labels.end(), per_cluster, static_cast<int>(c));
    return labels;
}

Matrix load_matrix(const std::string& path, MatrixFormat fmt) {
    switch (fmt) {
        case MatrixFormat::Csv: return load_csv(path);
        case MatrixFormat::IdxImages: return load_idx_images(path);
        case MatrixFormat::RawF32: return load_raw_f32(path);
    }
    throw UsageError("load_matrix: bad format");
}

Matrix load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");
    Matrix m;
    std::string line;
    std::size_t lineno = 0;
    std::vector<double> row;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() && in.peek() == EOF) break; // trailing newline
        row.clear();
        const char* p = line.c_str();
        std::size_t col = 0;
        for (;;) {
            char* end = nullptr;
            const double v = std::strtod(p, &end);
            if (end == p)
                fail(path, "row " + std::to_string(lineno) + ", column " + std::to_string(col + 1) +
                               ": not a number");
            if (!std::isfinite(v))
                fail(path, "row " + std::to_string(lineno) + ", column " + std::to_string(col + 1) +
                               ": non-finite entry");
            row.push_back(v);
            ++col;
            p = end;
            while (*p == ' ' || *p == '\t') ++p;
            if (*p == ',') {
                ++p;
                continue;
            }
            if (*p == '\0' || *p == '\r') break;
            fail(path, "row " + std::to_string(lineno) + ": unexpected character '" +
                           std::string(1, *p) + "'");
        }
        if (m.cols == 0) {
            m.cols = row.size();
        } else if (row.size() != m.cols) {
            fail(path, "row " + std::to_string(lineno) + ": expected " + std::to_string(m.cols) +
                           " columns, got " + std::to_string(row.size()));
        }
        m.values.insert(m.values.end(), row.begin(), row.end());
        ++m.rows;
    }
    if (m.rows == 0) fail(path, "empty file");
    return m;
}

Matrix load_idx_images(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    const std::uint32_t magic = read_be32(in, path, "magic");
    if (magic != 0x00000803u) {
        std::ostringstream os;
        os << "offset 0: idx image magic mismatch (got 0x" << std::hex << magic
           << ", want 0x803)";
        fail(path, os.str());
    }
    const std::uint32_t count = read_be32(in, path, "count");
    const std::uint32_t rows = read_be32(in, path, "rows");
    const std::uint32_t cols = read_be32(in, path, "cols");
    const std::size_t dim = std::size_t(rows) * cols;
    if (count == 0 || dim == 0) fail(path, "empty idx image file");
    Matrix m(count, dim);
    std::vector<unsigned char> buf(dim);
    for (std::uint32_t i = 0; i < count; ++i) {
        if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim)))
            fail(path, "truncated at image " + std::to_string(i));
        double* row = m.row(i);
        for (std::size_t d = 0; d < dim; ++d) row[d] = static_cast<double>(buf[d]);
    }
    return m;
}

std::vector<int> load_idx_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    const std::uint32_t magic = read_be32(in, path, "magic");
    if (magic != 0x00000801u) {
        std::ostringstream os;
        os << "offset 0: idx label magic mismatch (got 0x" << std::hex << magic
           << ", want 0x801)";
        fail(path, os.str());
    }
    const std::uint32_t count = read_be32(in, path, "count");
    std::vector<unsigned char> buf(count);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count)))
        fail(path, "truncated label data");
    return std::vector<int>(buf.begin(), buf.end());
}

std::vector<int> load_labels(const std::string& path) {
    {
        std::ifstream probe(path, std::ios::binary);
        if (!probe) fail(path, "cannot open");
        unsigned char b[4] = {1, 1, 1, 1};
        probe.read(reinterpret_cast<char*>(b), 4);
        if (probe.gcount() == 4 && b[0] == 0 && b[1] == 0 && b[2] == 0x08 && b[3] == 0x01)
            return load_idx_labels(path);
    }
    std::ifstream in(path);
    std::vector<int> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            labels.push_back(std::stoi(line));
        } catch (const std::exception&) {
            fail(path, "line " + std::to_string(lineno) + ": not an integer label");
        }
    }
    if (labels.empty()) fail(path, "no labels");
    return labels;
}

Matrix load_raw_f32(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    const std::uint64_t n = read_le64(in, path, "row count");
    const std::uint64_t dim = read_le64(in, path, "column count");
    if (n == 0 || dim == 0) fail(path, "empty matrix header");
    if (n > (1ull << 32) || dim > (1ull << 24)) fail(path, "implausible header dimensions");
    Matrix m(n, dim);
    std::vector<float> buf(dim);
    for (std::uint64_t i = 0; i < n; ++i) {
        if (!in.read(reinterpret_cast<char*>(buf.data()),
                     static_cast<std::streamsize>(dim * sizeof(float))))
            fail(path, "truncated at row " + std::to_string(i));
        double* row = m.row(i);
        for (std::uint64_t d = 0; d < dim; ++d) {
            if (!std::isfinite(buf[d]))
                fail(path, "row " + std::to_string(i) + ", column " + std::to_string(d) +
                               ": non-finite entry");
            row[d] = static_cast<double>(buf[d]);
        }
    }
    return m;
}

void save_csv(const Matrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(path, "cannot open for writing");
    char buf[64];
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
            out << buf;
            if (j + 1 < m.cols) out << ',';
        }
        out << '\n';
    }
    if (!out) fail(path, "write failed");
}

void save_raw_f32(const Matrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    write_le64(out, m.rows);
    write_le64(out, m.cols);
    std::vector<float> buf(m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) buf[j] = static_cast<float>(row[j]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(m.cols * sizeof(float)));
    }
    if (!out) fail(path, "write failed");
}

Matrix vstack(const Matrix& a, const Matrix& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    if (a.cols != b.cols)
        throw DataError("vstack: column mismatch (" + std::to_string(a.cols) + " vs " +
                        std::to_string(b.cols) + ")");
    Matrix m(a.rows + b.rows, a.cols);
    std::copy(a.values.begin(), a.values.end(), m.values.begin());
    std::copy(b.values.begin(), b.values.end(), m.values.begin() + static_cast<std::ptrdiff_t>(a.values.size()));
    return m;
}

Matrix subsample_rows(const Matrix& m, std::size_t count, std::uint64_t seed,
                      std::vector<std::size_t>* picked) {
    if (count >= m.rows) {
        if (picked) {
            picked->resize(m.rows);
            for (std::size_t i = 0; i < m.rows; ++i) (*picked)[i] = i;
        }
        return m;
    }
    Rng rng = Rng::stream(seed, 0x5ab5a3917ULL);
    auto idx = rng.sample_without_replacement(m.rows, count);
    Matrix out(count, m.cols);
    for (std::size_t i = 0; i < count; ++i)
        std::copy(m.row(idx[i]), m.row(idx[i]) + m.cols, out.row(i));
    if (picked) *picked = std::move(idx);
    return out;
}

} // namespace nesp
