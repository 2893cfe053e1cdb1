#include "vitc/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "vitc/common.hpp"
#include "vitc/imageio.hpp"

namespace fs = std::filesystem;

namespace vitc::data {

namespace {

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".ppm";
}

// rng() % n is deterministic for a fixed engine; the modulo bias is
// ~2^-64 and irrelevant for shuffling.
void shuffle_indices(std::vector<int64_t>& idx, std::mt19937_64& rng) {
    for (int64_t i = static_cast<int64_t>(idx.size()) - 1; i > 0; --i) {
        const int64_t j = static_cast<int64_t>(rng() % static_cast<uint64_t>(i + 1));
        std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    }
}

} // namespace

DatasetListing list_dataset(const std::string& root_dir) {
    const fs::path root(root_dir);
    if (!fs::is_directory(root)) throw IoError("dataset root '" + root_dir + "' is not a directory");

    std::vector<std::string> class_names;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) class_names.push_back(entry.path().filename().string());
    std::sort(class_names.begin(), class_names.end());
    if (class_names.empty()) throw IoError("dataset root '" + root_dir + "' has no class directories");

    DatasetListing listing;
    listing.catalog.names = class_names;
    listing.catalog.counts.assign(class_names.size(), 0);
    for (size_t c = 0; c < class_names.size(); ++c) {
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(root / class_names[c]))
            if (entry.is_regular_file() && has_image_extension(entry.path()))
                files.push_back(entry.path().filename().string());
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw IoError("class directory '" + class_names[c] + "' under '" + root_dir + "' has no images");
        for (const auto& f : files)
            listing.entries.push_back({class_names[c] + "/" + f, static_cast<int>(c)});
        listing.catalog.counts[c] = static_cast<int64_t>(files.size());
    }
    return listing;
}

LoadResult load_dataset(const std::string& root_dir, int workers) {
    const DatasetListing listing = list_dataset(root_dir);
    const fs::path root(root_dir);
    const size_t n = listing.entries.size();

    std::vector<Sample> decoded(n);
    std::vector<char> ok(n, 0);
    std::atomic<size_t> cursor{0};
    std::atomic<int> skipped{0};

    auto work = [&] {
        for (;;) {
            const size_t i = cursor.fetch_add(1);
            if (i >= n) return;
            const auto& entry = listing.entries[i];
            try {
                decoded[i].pixels = img::decode_image((root / entry.rel_path).string());
                decoded[i].label = entry.label;
                decoded[i].source_path = entry.rel_path;
                ok[i] = 1;
            } catch (const std::exception& e) {
                // per-file warning + skip; counted in the result
                std::cerr << "warning: skipping '" << entry.rel_path << "': " << e.what() << "\n";
                skipped.fetch_add(1);
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    LoadResult result;
    result.catalog.names = listing.catalog.names;
    result.catalog.counts.assign(listing.catalog.names.size(), 0);
    result.skipped = skipped.load();
    result.samples.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        if (!ok[i]) continue;
        result.catalog.counts[static_cast<size_t>(decoded[i].label)]++;
        result.samples.push_back(std::move(decoded[i]));
    }
    return result;
}

std::vector<Sample> load_paths(const std::string& root_dir, const std::vector<std::string>& class_names,
                               const std::vector<std::string>& rel_paths, int workers) {
    const fs::path root(root_dir);
    std::vector<Sample> out(rel_paths.size());
    std::atomic<size_t> cursor{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex err_mutex;

    auto label_of = [&](const std::string& rel) {
        const auto slash = rel.find('/');
        if (slash == std::string::npos) throw ValueError("load_paths: '" + rel + "' has no class directory");
        const std::string cls = rel.substr(0, slash);
        const auto it = std::find(class_names.begin(), class_names.end(), cls);
        if (it == class_names.end()) throw MismatchError("load_paths: unknown class '" + cls + "' in '" + rel + "'");
        return static_cast<int>(it - class_names.begin());
    };

    auto work = [&] {
        for (;;) {
            const size_t i = cursor.fetch_add(1);
            if (i >= rel_paths.size() || failed.load()) return;
            try {
                out[i].pixels = img::decode_image((root / rel_paths[i]).string());
                out[i].label = label_of(rel_paths[i]);
                out[i].source_path = rel_paths[i];
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!failed.exchange(true)) first_error = e.what();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (failed.load()) throw IoError("load_paths: " + first_error);
    return out;
}

core::TensorF resize_bilinear(const core::TensorF& pixels, int out_h, int out_w) {
    if (pixels.ndim() != 3) throw ValueError("resize: expected [H,W,C], got " + core::shape_str(pixels.shape()));
    if (out_h <= 0 || out_w <= 0) throw ValueError("resize: output size must be positive");
    const int64_t h = pixels.dim(0), w = pixels.dim(1), c = pixels.dim(2);
    if (h == out_h && w == out_w) return pixels.clone();

    core::TensorF out({out_h, out_w, c});
    auto src = pixels.data();
    auto dst = out.data();
    const double sy = static_cast<double>(h) / out_h;
    const double sx = static_cast<double>(w) / out_w;
    for (int64_t y = 0; y < out_h; ++y) {
        double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
        const int64_t y0 = static_cast<int64_t>(fy);
        const int64_t y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - static_cast<double>(y0);
        for (int64_t x = 0; x < out_w; ++x) {
            double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
            const int64_t x0 = static_cast<int64_t>(fx);
            const int64_t x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - static_cast<double>(x0);
            for (int64_t ch = 0; ch < c; ++ch) {
                const double top = (1.0 - wx) * src[(y0 * w + x0) * c + ch] + wx * src[(y0 * w + x1) * c + ch];
                const double bot = (1.0 - wx) * src[(y1 * w + x0) * c + ch] + wx * src[(y1 * w + x1) * c + ch];
                dst[(y * out_w + x) * c + ch] = static_cast<float>((1.0 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

core::TensorF standardize(const core::TensorF& pixels) {
    double mu = 0;
    auto pd = pixels.data();
    const int64_t n = pixels.numel();
    for (int64_t i = 0; i < n; ++i) mu += pd[i];
    mu /= static_cast<double>(n);
    double var = 0;
    for (int64_t i = 0; i < n; ++i) {
        const double d = pd[i] - mu;
        var += d * d;
    }
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::max(std::sqrt(var), 1e-6);
    core::TensorF out(pixels.shape());
    auto od = out.data();
    for (int64_t i = 0; i < n; ++i) od[i] = static_cast<float>((pd[i] - mu) * inv);
    return out;
}

namespace {

struct Buckets {
    std::vector<std::string> train, val, test;
};

void assign_shuffled(const std::vector<const ListingEntry*>& items, int64_t n_test, int64_t n_val,
                     std::mt19937_64& rng, Buckets& out) {
    std::vector<int64_t> idx(items.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int64_t>(i);
    shuffle_indices(idx, rng);
    for (size_t i = 0; i < idx.size(); ++i) {
        const std::string& p = items[static_cast<size_t>(idx[i])]->rel_path;
        if (static_cast<int64_t>(i) < n_test)
            out.test.push_back(p);
        else if (static_cast<int64_t>(i) < n_test + n_val)
            out.val.push_back(p);
        else
            out.train.push_back(p);
    }
}

/// Largest-remainder allocation of `total` across classes proportional
/// to class sizes; exact sum guaranteed.
std::vector<int64_t> proportional_alloc(const std::vector<int64_t>& class_sizes, int64_t total, int64_t grand) {
    const size_t k = class_sizes.size();
    std::vector<int64_t> alloc(k);
    std::vector<std::pair<double, size_t>> rema(k);
    int64_t assigned = 0;
    for (size_t c = 0; c < k; ++c) {
        const double exact = static_cast<double>(class_sizes[c]) * static_cast<double>(total) /
                             static_cast<double>(grand);
        alloc[c] = static_cast<int64_t>(exact);
        rema[c] = {exact - static_cast<double>(alloc[c]), c};
        assigned += alloc[c];
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (size_t i = 0; assigned < total && i < k; ++i, ++assigned) alloc[rema[i].second]++;
    return alloc;
}

} // namespace

SplitManifest split_dataset(const DatasetListing& listing, const SplitSpec& spec) {
    const int64_t n = static_cast<int64_t>(listing.entries.size());
    if (n == 0) throw ValueError("split: empty listing");

    int64_t n_train = 0, n_val = 0, n_test = 0;
    if (spec.mode == SplitMode::Counts) {
        n_train = spec.count_train;
        n_val = spec.count_val;
        n_test = spec.count_test;
        if (n_train < 0 || n_val < 0 || n_test < 0 || n_train + n_val + n_test != n)
            throw ValueError("split: counts " + std::to_string(n_train) + "/" + std::to_string(n_val) + "/" +
                             std::to_string(n_test) + " do not partition " + std::to_string(n) + " samples");
    } else {
        if (spec.test_fraction <= 0.0 || spec.test_fraction >= 1.0 || spec.val_from_train < 0.0 ||
            spec.val_from_train >= 1.0)
            throw ValueError("split: fractions out of range");
        n_test = static_cast<int64_t>(static_cast<double>(n) * spec.test_fraction);
        const int64_t pool = n - n_test;
        n_val = static_cast<int64_t>(static_cast<double>(pool) * spec.val_from_train);
        n_train = pool - n_val;
    }

    std::mt19937_64 rng(spec.seed);
    Buckets buckets;
    if (!spec.stratified) {
        std::vector<const ListingEntry*> all;
        all.reserve(static_cast<size_t>(n));
        for (const auto& e : listing.entries) all.push_back(&e);
        assign_shuffled(all, n_test, n_val, rng, buckets);
    } else {
        const size_t k = listing.catalog.names.size();
        std::vector<std::vector<const ListingEntry*>> per_class(k);
        for (const auto& e : listing.entries) per_class[static_cast<size_t>(e.label)].push_back(&e);
        std::vector<int64_t> sizes(k);
        for (size_t c = 0; c < k; ++c) sizes[c] = static_cast<int64_t>(per_class[c].size());

        std::vector<int64_t> test_alloc, val_alloc;
        if (spec.mode == SplitMode::Counts) {
            test_alloc = proportional_alloc(sizes, n_test, n);
            val_alloc = proportional_alloc(sizes, n_val, n);
            for (size_t c = 0; c < k; ++c)
                if (test_alloc[c] + val_alloc[c] > sizes[c])
                    throw ValueError("split: stratified counts infeasible for class '" +
                                     listing.catalog.names[c] + "'");
        } else {
            test_alloc.resize(k);
            val_alloc.resize(k);
            for (size_t c = 0; c < k; ++c) {
                test_alloc[c] = static_cast<int64_t>(static_cast<double>(sizes[c]) * spec.test_fraction);
                const int64_t pool = sizes[c] - test_alloc[c];
                val_alloc[c] = static_cast<int64_t>(static_cast<double>(pool) * spec.val_from_train);
            }
        }
        for (size_t c = 0; c < k; ++c) assign_shuffled(per_class[c], test_alloc[c], val_alloc[c], rng, buckets);
    }

    SplitManifest manifest;
    manifest.spec = spec;
    manifest.train = std::move(buckets.train);
    manifest.val = std::move(buckets.val);
    manifest.test = std::move(buckets.test);
    return manifest;
}

void SplitManifest::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest '" + path + "'");
    out << "# vitc-split seed=" << spec.seed << " mode=" << (spec.mode == SplitMode::Counts ? "counts" : "fractions")
        << " test_fraction=" << spec.test_fraction << " val_from_train=" << spec.val_from_train
        << " counts=" << spec.count_train << "," << spec.count_val << "," << spec.count_test
        << " stratified=" << (spec.stratified ? 1 : 0) << "\n";
    for (const auto& p : train) out << "train\t" << p << "\n";
    for (const auto& p : val) out << "val\t" << p << "\n";
    for (const auto& p : test) out << "test\t" << p << "\n";
    if (!out) throw IoError("short write to manifest '" + path + "'");
}

SplitManifest SplitManifest::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read manifest '" + path + "'");
    std::string header;
    if (!std::getline(in, header) || header.rfind("# vitc-split", 0) != 0)
        throw FormatError("missing manifest header in '" + path + "'");

    SplitManifest m;
    std::istringstream hs(header.substr(12));
    std::string kv;
    while (hs >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
        if (key == "seed") m.spec.seed = std::stoull(val);
        else if (key == "mode") m.spec.mode = (val == "counts") ? SplitMode::Counts : SplitMode::Fractions;
        else if (key == "test_fraction") m.spec.test_fraction = std::stod(val);
        else if (key == "val_from_train") m.spec.val_from_train = std::stod(val);
        else if (key == "stratified") m.spec.stratified = (val == "1");
        else if (key == "counts") {
            std::istringstream cs(val);
            char comma;
            cs >> m.spec.count_train >> comma >> m.spec.count_val >> comma >> m.spec.count_test;
        }
    }
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw FormatError("malformed manifest line: '" + line + "'");
        const std::string split = line.substr(0, tab), p = line.substr(tab + 1);
        if (split == "train") m.train.push_back(p);
        else if (split == "val") m.val.push_back(p);
        else if (split == "test") m.test.push_back(p);
        else throw FormatError("unknown split '" + split + "' in manifest");
    }
    return m;
}

std::vector<Sample> select_split(const std::vector<Sample>& samples, const std::vector<std::string>& split_paths) {
    std::unordered_set<std::string> wanted(split_paths.begin(), split_paths.end());
    std::vector<Sample> out;
    out.reserve(split_paths.size());
    for (const auto& s : samples)
        if (wanted.count(s.source_path)) out.push_back(s);
    return out;
}

} // namespace vitc::data
