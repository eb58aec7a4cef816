#pragma once

// PCDD dataset files and CSV interchange.
//
// PCDD layout, all integers and reals little-endian:
//   "PCDD" | u32 version | u32 name_len | name bytes | u32 d | u32 m |
//   u64 N | u64 seed | f64 lower[d] | f64 upper[d] | f64 X[N*d] | f64 Y[N*m]
// X and Y are row-major.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "pcd/core.hpp"

namespace pcd {

inline constexpr char kDatasetMagic[4] = {'P', 'C', 'D', 'D'};
inline constexpr std::uint32_t kDatasetVersion = 1;

namespace io {

template <class T>
T byteswap_if_big(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
        return v;
    }
}

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    template <class T>
    void pod(T v) {
        v = byteswap_if_big(v);
        bytes(&v, sizeof(T));
    }
    void str(const std::string& s) {
        pod<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    template <class T>
    void array(const T* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) pod<T>(p[i]);
    }
    const std::vector<char>& buffer() const { return buf_; }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw RuntimeFailure("cannot open '" + path.string() + "' for writing");
        out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        if (!out) throw RuntimeFailure("write failed for '" + path.string() + "'");
    }

private:
    std::vector<char> buf_;
};

class Reader {
public:
    Reader(std::vector<char> data, std::string what) : data_(std::move(data)), what_(std::move(what)) {}

    static Reader from_file(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw RuntimeFailure("cannot open '" + path.string() + "'");
        std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return Reader(std::move(data), path.string());
    }

    void bytes(void* p, std::size_t n) {
        if (n > data_.size() - pos_) {
            throw RuntimeFailure(what_ + ": truncated file (needed " + std::to_string(n) + " bytes at offset " +
                                 std::to_string(pos_) + ")");
        }
        std::memcpy(p, data_.data() + pos_, n);
        pos_ += n;
    }
    template <class T>
    T pod() {
        T v;
        bytes(&v, sizeof(T));
        return byteswap_if_big(v);
    }
    std::string str(std::size_t max_len = 1 << 16) {
        const auto n = pod<std::uint32_t>();
        if (n > max_len) throw RuntimeFailure(what_ + ": implausible string length " + std::to_string(n));
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    template <class T>
    void array(T* p, std::size_t n) {
        if (n > (data_.size() - pos_) / sizeof(T)) {
            throw RuntimeFailure(what_ + ": truncated file (array of " + std::to_string(n) + " elements)");
        }
        for (std::size_t i = 0; i < n; ++i) p[i] = pod<T>();
    }
    bool at_end() const { return pos_ == data_.size(); }
    const std::string& what() const { return what_; }

private:
    std::vector<char> data_;
    std::size_t pos_ = 0;
    std::string what_;
};

}  // namespace io

inline std::vector<char> encode_dataset(const OfflineDataset& ds) {
    ds.validate();
    io::Writer w;
    w.bytes(kDatasetMagic, 4);
    w.pod<std::uint32_t>(kDatasetVersion);
    w.str(ds.task_name);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(ds.dim()));
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(ds.n_objectives()));
    w.pod<std::uint64_t>(ds.size());
    w.pod<std::uint64_t>(ds.seed);
    w.array(ds.lower_bounds.data(), ds.dim());
    w.array(ds.upper_bounds.data(), ds.dim());
    w.array(ds.X.data(), static_cast<std::size_t>(ds.X.size()));
    w.array(ds.Y.data(), static_cast<std::size_t>(ds.Y.size()));
    return w.buffer();
}

inline void save_dataset(const OfflineDataset& ds, const std::filesystem::path& path) {
    io::Writer w;
    const auto bytes = encode_dataset(ds);
    w.bytes(bytes.data(), bytes.size());
    w.save(path);
}

inline OfflineDataset decode_dataset(io::Reader& r) {
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kDatasetMagic, 4) != 0) throw RuntimeFailure(r.what() + ": not a PCDD dataset (bad magic)");
    const auto version = r.pod<std::uint32_t>();
    if (version != kDatasetVersion) {
        throw RuntimeFailure(r.what() + ": unsupported dataset version " + std::to_string(version));
    }
    OfflineDataset ds;
    ds.task_name = r.str();
    const auto d = r.pod<std::uint32_t>();
    const auto m = r.pod<std::uint32_t>();
    const auto n = r.pod<std::uint64_t>();
    ds.seed = r.pod<std::uint64_t>();
    if (d == 0 || m == 0 || n == 0) throw RuntimeFailure(r.what() + ": empty dataset header");
    ds.lower_bounds.resize(d);
    ds.upper_bounds.resize(d);
    r.array(ds.lower_bounds.data(), d);
    r.array(ds.upper_bounds.data(), d);
    ds.X.resize(static_cast<Eigen::Index>(n), d);
    r.array(ds.X.data(), static_cast<std::size_t>(ds.X.size()));
    ds.Y.resize(static_cast<Eigen::Index>(n), m);
    r.array(ds.Y.data(), static_cast<std::size_t>(ds.Y.size()));
    if (!r.at_end()) throw RuntimeFailure(r.what() + ": trailing bytes after dataset payload");
    return ds;
}

inline OfflineDataset load_dataset(const std::filesystem::path& path) {
    io::Reader r = io::Reader::from_file(path);
    return decode_dataset(r);
}

// CSV with header x0..x{d-1},y0..y{m-1} (plus any extra named columns).
inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot open '" + path.string() + "' for writing");
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    out << std::setprecision(17);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c][r];
        out << '\n';
    }
    if (!out) throw RuntimeFailure("write failed for '" + path.string() + "'");
}

inline std::vector<std::vector<double>> matrix_columns(const Matrix& M) {
    std::vector<std::vector<double>> cols(static_cast<std::size_t>(M.cols()));
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
        cols[static_cast<std::size_t>(c)].reserve(static_cast<std::size_t>(M.rows()));
        for (Eigen::Index r = 0; r < M.rows(); ++r) cols[static_cast<std::size_t>(c)].push_back(M(r, c));
    }
    return cols;
}

inline std::vector<std::string> prefixed(const std::string& prefix, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

inline void export_dataset_csv(const OfflineDataset& ds, const std::filesystem::path& path) {
    auto header = prefixed("x", ds.dim());
    const auto yh = prefixed("y", ds.n_objectives());
    header.insert(header.end(), yh.begin(), yh.end());
    auto cols = matrix_columns(ds.X);
    auto ycols = matrix_columns(ds.Y);
    cols.insert(cols.end(), ycols.begin(), ycols.end());
    write_csv(path, header, cols);
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::vector<std::size_t> columns_with_prefix(char prefix) const {
        std::vector<std::size_t> out;
        for (std::size_t c = 0; c < header.size(); ++c) {
            const auto& h = header[c];
            if (h.size() >= 2 && h[0] == prefix &&
                h.find_first_not_of("0123456789", 1) == std::string::npos) {
                out.push_back(c);
            }
        }
        return out;
    }

    Matrix gather(const std::vector<std::size_t>& cols) const {
        Matrix M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (std::size_t c = 0; c < cols.size(); ++c) {
                M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][cols[c]];
            }
        }
        return M;
    }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw RuntimeFailure("cannot open '" + path.string() + "'");
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw RuntimeFailure(path.string() + ": empty CSV");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw RuntimeFailure(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
        }
        if (row.size() != t.header.size()) {
            throw RuntimeFailure(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                 std::to_string(t.header.size()) + " columns");
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

// Imports a dataset exported by export_dataset_csv. Bounds default to the
// column ranges when not supplied.
inline OfflineDataset import_dataset_csv(const std::filesystem::path& path, const std::string& task_name,
                                         const Vector* lower = nullptr, const Vector* upper = nullptr) {
    const CsvTable t = read_csv(path);
    const auto xc = t.columns_with_prefix('x');
    const auto yc = t.columns_with_prefix('y');
    if (xc.empty() || yc.empty() || t.rows.empty()) throw RuntimeFailure(path.string() + ": need x*, y* columns and rows");
    OfflineDataset ds;
    ds.task_name = task_name;
    ds.X = t.gather(xc);
    ds.Y = t.gather(yc);
    ds.lower_bounds = lower ? *lower : Vector(ds.X.colwise().minCoeff().transpose());
    ds.upper_bounds = upper ? *upper : Vector(ds.X.colwise().maxCoeff().transpose());
    ds.validate();
    return ds;
}

}  // namespace pcd
