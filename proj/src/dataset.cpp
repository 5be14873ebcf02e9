#include "clab/dataset.hpp"

#include "clab/binio.hpp"
#include "clab/errors.hpp"
#include "clab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace clab {

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(num_classes, 0);
    for (std::size_t l : labels) {
        if (l >= num_classes) {
            throw std::invalid_argument("dataset: label out of range");
        }
        ++counts[l];
    }
    return counts;
}

TrainTest gaussian_toy(std::size_t num_classes, std::size_t per_class_n, std::size_t dim,
                       double spread, std::uint64_t seed) {
    if (num_classes < 2 || dim < 2) {
        throw std::invalid_argument("gaussian_toy: need C >= 2 and dim >= 2");
    }
    if (per_class_n < 5) {
        throw std::invalid_argument("gaussian_toy: need per_class_n >= 5 for the 80/20 split");
    }
    const std::size_t test_n = per_class_n / 5;
    const std::size_t train_n = per_class_n - test_n;

    Dataset train, test;
    for (Dataset* d : {&train, &test}) {
        d->name = "gaussian_toy";
        d->sample_shape = {dim};
        d->num_classes = num_classes;
    }
    train.samples.reserve(num_classes * train_n * dim);
    test.samples.reserve(num_classes * test_n * dim);

    Rng rng(seed);
    std::vector<double> mean(dim, 0.0);
    std::vector<double> row(dim, 0.0);
    for (std::size_t c = 0; c < num_classes; ++c) {
        const double angle =
            2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(num_classes);
        std::fill(mean.begin(), mean.end(), 0.0);
        mean[0] = std::cos(angle);
        mean[1] = std::sin(angle);
        for (std::size_t s = 0; s < per_class_n; ++s) {
            for (std::size_t d = 0; d < dim; ++d) {
                row[d] = mean[d] + spread * rng.normal();
            }
            Dataset& dst = s < train_n ? train : test;
            dst.samples.insert(dst.samples.end(), row.begin(), row.end());
            dst.labels.push_back(c);
            dst.ids.push_back(c * per_class_n + s);
        }
    }
    return {std::move(train), std::move(test)};
}

std::vector<std::size_t> longtail_counts(std::size_t num_classes, std::size_t n_max,
                                         double imb_factor) {
    if (num_classes < 2) {
        throw std::invalid_argument("longtail_counts: need C >= 2");
    }
    if (imb_factor < 1.0) {
        throw std::invalid_argument("longtail_counts: imbalance factor must be >= 1");
    }
    std::vector<std::size_t> counts(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
        const double expo =
            -static_cast<double>(c) / static_cast<double>(num_classes - 1);
        const double raw = static_cast<double>(n_max) * std::pow(imb_factor, expo);
        // Guard against pow landing an ulp under an exact integer result.
        const double n = std::floor(raw + 1e-9);
        if (n < 1.0) {
            throw std::invalid_argument("longtail_counts: class count fell below 1");
        }
        counts[c] = static_cast<std::size_t>(n);
    }
    return counts;
}

Dataset longtail_subsample(const Dataset& ds, double imb_factor, std::uint64_t seed) {
    const auto counts = ds.class_counts();
    for (std::size_t c = 1; c < counts.size(); ++c) {
        if (counts[c] != counts[0]) {
            throw std::invalid_argument("longtail_subsample: input must be balanced");
        }
    }
    const auto target = longtail_counts(ds.num_classes, counts[0], imb_factor);

    std::vector<std::vector<std::size_t>> members(ds.num_classes);
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        members[ds.labels[i]].push_back(i);
    }

    Rng rng(seed);
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < ds.num_classes; ++c) {
        auto& m = members[c];
        rng.shuffle(m);
        m.resize(target[c]);
        std::sort(m.begin(), m.end());
        keep.insert(keep.end(), m.begin(), m.end());
    }

    Dataset out;
    out.name = ds.name + "_lt";
    out.sample_shape = ds.sample_shape;
    out.num_classes = ds.num_classes;
    const std::size_t d = ds.sample_dim();
    out.samples.reserve(keep.size() * d);
    for (std::size_t i : keep) {
        out.samples.insert(out.samples.end(), ds.samples.begin() + static_cast<std::ptrdiff_t>(i * d),
                           ds.samples.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
        out.labels.push_back(ds.labels[i]);
        out.ids.push_back(ds.ids[i]);
        if (!ds.fine_labels.empty()) {
            out.fine_labels.push_back(ds.fine_labels[i]);
        }
    }
    return out;
}

Dataset apply_coarse(const Dataset& ds, const std::vector<std::size_t>& fine_to_coarse) {
    if (fine_to_coarse.size() != ds.num_classes) {
        throw std::invalid_argument("apply_coarse: map must cover every fine class");
    }
    std::size_t coarse_classes = 0;
    for (std::size_t c : fine_to_coarse) {
        coarse_classes = std::max(coarse_classes, c + 1);
    }
    std::vector<bool> hit(coarse_classes, false);
    for (std::size_t c : fine_to_coarse) {
        hit[c] = true;
    }
    for (bool h : hit) {
        if (!h) {
            throw std::invalid_argument("apply_coarse: map is not surjective");
        }
    }

    Dataset out = ds;
    out.name = ds.name + "_coarse";
    out.num_classes = coarse_classes;
    out.fine_labels = ds.labels;
    for (std::size_t i = 0; i < out.labels.size(); ++i) {
        out.labels[i] = fine_to_coarse[ds.labels[i]];
    }
    return out;
}

namespace {

constexpr char kMagic[4] = {'C', 'L', 'A', 'B'};
constexpr std::uint32_t kVersion = 1;

} // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("dataset: cannot open '" + path + "' for writing");
    }
    io::write_magic(os, kMagic);
    io::write_u32(os, kVersion);
    io::write_u32(os, static_cast<std::uint32_t>(ds.size()));
    io::write_u32(os, static_cast<std::uint32_t>(ds.sample_shape.size()));
    for (std::size_t d : ds.sample_shape) {
        io::write_u32(os, static_cast<std::uint32_t>(d));
    }
    for (double v : ds.samples) {
        io::write_f64(os, v);
    }
    for (std::size_t l : ds.labels) {
        io::write_u32(os, static_cast<std::uint32_t>(l));
    }
    io::write_u32(os, ds.fine_labels.empty() ? 0u : 1u);
    for (std::size_t l : ds.fine_labels) {
        io::write_u32(os, static_cast<std::uint32_t>(l));
    }
    os.flush();
    if (!os) {
        throw IoError("dataset: write failed");
    }
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("dataset: cannot open '" + path + "'");
    }
    io::read_magic(is, kMagic, "dataset");
    const std::uint32_t version = io::read_u32(is);
    if (version != kVersion) {
        throw IoError("dataset: unsupported version");
    }
    const std::uint32_t m = io::read_u32(is);
    const std::uint32_t rank = io::read_u32(is);
    if (rank == 0 || rank > 8) {
        throw IoError("dataset: implausible sample rank");
    }
    Dataset ds;
    ds.name = "loaded";
    std::size_t dim = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        const std::uint32_t d = io::read_u32(is);
        if (d == 0) {
            throw IoError("dataset: zero sample dimension");
        }
        ds.sample_shape.push_back(d);
        dim *= d;
    }
    ds.samples.resize(static_cast<std::size_t>(m) * dim);
    for (double& v : ds.samples) {
        v = io::read_f64(is);
    }
    ds.labels.resize(m);
    for (std::size_t& l : ds.labels) {
        l = io::read_u32(is);
    }
    const std::uint32_t has_fine = io::read_u32(is);
    if (has_fine > 1) {
        throw IoError("dataset: bad fine-label flag");
    }
    if (has_fine == 1) {
        ds.fine_labels.resize(m);
        for (std::size_t& l : ds.fine_labels) {
            l = io::read_u32(is);
        }
    }
    is.peek();
    if (!is.eof()) {
        throw IoError("dataset: trailing bytes");
    }
    ds.ids.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        ds.ids[i] = i;
    }
    for (std::size_t l : ds.labels) {
        ds.num_classes = std::max(ds.num_classes, l + 1);
    }
    if (ds.num_classes < 2) {
        throw IoError("dataset: fewer than two classes");
    }
    return ds;
}

Dataset import_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("csv: cannot open '" + path + "'");
    }
    std::string line;
    if (!std::getline(is, line)) {
        throw IoError("csv: empty file");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            header.push_back(field);
        }
    }
    if (header.size() < 2 || header.back() != "label") {
        throw IoError("csv: header must be f0,...,f{d-1},label");
    }
    const std::size_t dim = header.size() - 1;
    for (std::size_t i = 0; i < dim; ++i) {
        if (header[i] != "f" + std::to_string(i)) {
            throw IoError("csv: header must be f0,...,f{d-1},label");
        }
    }

    Dataset ds;
    ds.name = "csv";
    ds.sample_shape = {dim};
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) {
            fields.push_back(field);
        }
        if (fields.size() != dim + 1) {
            throw IoError("csv: line " + std::to_string(line_no) + " has " +
                          std::to_string(fields.size()) + " fields, expected " +
                          std::to_string(dim + 1));
        }
        for (std::size_t i = 0; i < dim; ++i) {
            std::size_t pos = 0;
            double v = 0.0;
            try {
                v = std::stod(fields[i], &pos);
            } catch (const std::exception&) {
                throw IoError("csv: line " + std::to_string(line_no) + ": bad number '" +
                              fields[i] + "'");
            }
            if (pos != fields[i].size()) {
                throw IoError("csv: line " + std::to_string(line_no) + ": bad number '" +
                              fields[i] + "'");
            }
            ds.samples.push_back(v);
        }
        std::size_t pos = 0;
        unsigned long label = 0;
        try {
            label = std::stoul(fields[dim], &pos);
        } catch (const std::exception&) {
            throw IoError("csv: line " + std::to_string(line_no) + ": bad label '" +
                          fields[dim] + "'");
        }
        if (pos != fields[dim].size()) {
            throw IoError("csv: line " + std::to_string(line_no) + ": bad label '" +
                          fields[dim] + "'");
        }
        ds.labels.push_back(static_cast<std::size_t>(label));
    }
    if (ds.labels.empty()) {
        throw IoError("csv: no data rows");
    }
    ds.ids.resize(ds.labels.size());
    for (std::size_t i = 0; i < ds.ids.size(); ++i) {
        ds.ids[i] = i;
    }
    for (std::size_t l : ds.labels) {
        ds.num_classes = std::max(ds.num_classes, l + 1);
    }
    return ds;
}

} // namespace clab
