#include "dxcs/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "dxcs/errors.hpp"
#include "dxcs/serialize.hpp"

namespace dxcs {

namespace {

constexpr uint32_t kIdxImagesMagic = 0x00000803;
constexpr uint32_t kIdxLabelsMagic = 0x00000801;
constexpr uint32_t kCacheMagic = 0x53445844; // "DXDS"
constexpr uint8_t kCacheVersion = 1;

uint32_t read_be32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw FormatError("truncated IDX header");
    return (static_cast<uint32_t>(b[0]) << 24) | (static_cast<uint32_t>(b[1]) << 16) |
           (static_cast<uint32_t>(b[2]) << 8) | static_cast<uint32_t>(b[3]);
}

int count_classes(const std::vector<int>& labels) {
    int mx = -1;
    for (int l : labels) {
        if (l < 0) throw FormatError("negative class label");
        mx = std::max(mx, l);
    }
    return mx + 1;
}

} // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream im(images_path, std::ios::binary);
    if (!im) throw DataError("cannot open " + images_path);
    if (read_be32(im) != kIdxImagesMagic) {
        throw FormatError(images_path + ": bad IDX image magic");
    }
    const uint32_t n = read_be32(im);
    const uint32_t rows = read_be32(im);
    const uint32_t cols = read_be32(im);
    if (n == 0 || rows == 0 || cols == 0 || rows > 4096 || cols > 4096) {
        throw FormatError(images_path + ": implausible IDX dimensions");
    }

    Dataset ds;
    ds.shape = Shape{1, static_cast<int>(rows), static_cast<int>(cols)};
    const size_t px = static_cast<size_t>(rows) * cols;
    ds.features.resize(static_cast<size_t>(n) * px);
    std::vector<unsigned char> buf(px);
    for (uint32_t i = 0; i < n; ++i) {
        im.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(px));
        if (!im) throw FormatError(images_path + ": truncated image data");
        float* out = ds.features.data() + static_cast<size_t>(i) * px;
        for (size_t j = 0; j < px; ++j) {
            out[j] = static_cast<float>(buf[j]) / 255.0f;
        }
    }

    std::ifstream lb(labels_path, std::ios::binary);
    if (!lb) throw DataError("cannot open " + labels_path);
    if (read_be32(lb) != kIdxLabelsMagic) {
        throw FormatError(labels_path + ": bad IDX label magic");
    }
    if (read_be32(lb) != n) {
        throw FormatError(labels_path + ": label count does not match images");
    }
    ds.labels.resize(n);
    std::vector<unsigned char> lbuf(n);
    lb.read(reinterpret_cast<char*>(lbuf.data()), static_cast<std::streamsize>(n));
    if (!lb) throw FormatError(labels_path + ": truncated label data");
    for (uint32_t i = 0; i < n; ++i) ds.labels[i] = lbuf[i];
    ds.n_classes = count_classes(ds.labels);
    return ds;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema,
                 double* detected_lo, double* detected_hi) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);

    std::vector<double> raw;
    std::vector<int> labels;
    size_t n_features = 0;
    std::string line;
    size_t lineno = 0;
    bool skipped_header = !schema.has_header;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (!skipped_header) {
            skipped_header = true;
            continue;
        }
        std::vector<double> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                size_t pos = 0;
                const double v = std::stod(cell, &pos);
                while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
                if (pos != cell.size()) throw std::invalid_argument(cell);
                cells.push_back(v);
            } catch (const std::exception&) {
                throw FormatError(path + ":" + std::to_string(lineno) +
                                  ": non-numeric cell '" + cell + "'");
            }
        }
        if (cells.size() < 2) {
            throw FormatError(path + ":" + std::to_string(lineno) +
                              ": row needs at least one feature and a label");
        }
        const size_t label_col = schema.label_column < 0
                                     ? cells.size() - 1
                                     : static_cast<size_t>(schema.label_column);
        if (label_col >= cells.size()) {
            throw FormatError(path + ": label column out of range");
        }
        const double lv = cells[label_col];
        if (lv != std::floor(lv)) {
            throw FormatError(path + ":" + std::to_string(lineno) +
                              ": non-integer label");
        }
        labels.push_back(static_cast<int>(lv));
        cells.erase(cells.begin() + static_cast<std::ptrdiff_t>(label_col));
        if (n_features == 0) {
            n_features = cells.size();
        } else if (cells.size() != n_features) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": ragged row");
        }
        raw.insert(raw.end(), cells.begin(), cells.end());
    }
    if (labels.empty()) throw FormatError(path + ": no data rows");

    // Min-max over the whole feature block; exports differ in source range.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : raw) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (detected_lo) *detected_lo = lo;
    if (detected_hi) *detected_hi = hi;
    const double range = hi - lo;

    Dataset ds;
    if (schema.image_side > 0) {
        if (static_cast<size_t>(schema.image_side) * schema.image_side != n_features) {
            throw FormatError(path + ": feature count does not form the declared image");
        }
        ds.shape = Shape{1, schema.image_side, schema.image_side};
    } else {
        ds.shape = Shape{1, 1, static_cast<int>(n_features)};
    }
    ds.features.resize(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        ds.features[i] = range > 0.0
                             ? static_cast<float>((raw[i] - lo) / range)
                             : 0.0f;
    }
    ds.labels = std::move(labels);
    ds.n_classes = count_classes(ds.labels);
    return ds;
}

void save_cache(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path);
    BinaryWriter w(os);
    w.u32(kCacheMagic);
    w.u8(kCacheVersion);
    w.i32(ds.shape.c);
    w.i32(ds.shape.h);
    w.i32(ds.shape.w);
    w.i32(ds.n_classes);
    w.u64(ds.labels.size());
    for (int l : ds.labels) w.i32(l);
    w.u64(ds.features.size());
    os.write(reinterpret_cast<const char*>(ds.features.data()),
             static_cast<std::streamsize>(ds.features.size() * sizeof(float)));
}

Dataset load_cache(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    BinaryReader r(is);
    if (r.u32() != kCacheMagic) throw FormatError(path + ": not a dataset cache");
    if (r.u8() != kCacheVersion) throw FormatError(path + ": unsupported cache version");
    Dataset ds;
    ds.shape.c = r.i32();
    ds.shape.h = r.i32();
    ds.shape.w = r.i32();
    ds.n_classes = r.i32();
    const uint64_t n = r.u64();
    if (n > (UINT64_C(1) << 32)) throw FormatError("implausible instance count");
    ds.labels.resize(n);
    for (auto& l : ds.labels) l = r.i32();
    const uint64_t nf = r.u64();
    if (nf != n * static_cast<uint64_t>(ds.shape.flat())) {
        throw FormatError(path + ": feature block size mismatch");
    }
    ds.features.resize(nf);
    is.read(reinterpret_cast<char*>(ds.features.data()),
            static_cast<std::streamsize>(nf * sizeof(float)));
    if (!is) throw FormatError(path + ": truncated feature data");
    return ds;
}

SplitPlan make_splits(const Dataset& ds, SplitKind kind, uint64_t seed) {
    Rng rng(seed);
    std::vector<size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng.engine());

    SplitPlan plan;
    if (kind == SplitKind::ShuffledHoldout) {
        const size_t n_test = static_cast<size_t>(std::llround(0.1 * static_cast<double>(ds.size())));
        plan.test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
        const size_t n_rest = ds.size() - n_test;
        const size_t n_val = static_cast<size_t>(std::llround(0.1 * static_cast<double>(n_rest)));
        plan.validation.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test),
                               idx.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
        plan.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), idx.end());
    } else {
        const size_t n_val = static_cast<size_t>(std::llround(0.1 * static_cast<double>(ds.size())));
        plan.validation.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
        plan.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    }
    return plan;
}

std::vector<size_t> sample_without_replacement(std::span<const size_t> pool,
                                               size_t k, Rng& rng) {
    std::vector<size_t> idx(pool.begin(), pool.end());
    k = std::min(k, idx.size());
    // partial Fisher-Yates
    for (size_t i = 0; i < k; ++i) {
        const size_t j = i + static_cast<size_t>(rng.uniform_int(
                                 0, static_cast<int>(idx.size() - i) - 1));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

void one_hot(int label, int n_classes, std::vector<double>& out) {
    out.assign(static_cast<size_t>(n_classes), 0.0);
    out[static_cast<size_t>(label)] = 1.0;
}

} // namespace dxcs
