#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <jpeglib.h>

#include "testutil.hpp"
#include "vitc/dataset.hpp"
#include "vitc/imageio.hpp"

using namespace vitc;
namespace fs = std::filesystem;

namespace {

/// root with the given classes; each file is a small distinct PPM.
void write_tree(const testutil::TempDir& dir, const std::vector<std::pair<std::string, int>>& classes) {
    int stamp = 1;
    for (const auto& [name, count] : classes) {
        fs::create_directories(dir.path() / name);
        for (int i = 0; i < count; ++i) {
            core::TensorF im({6, 6, 3});
            for (auto& v : im.data()) v = static_cast<float>((stamp * 17) % 251) / 255.0f;
            img::write_ppm((dir.path() / name / ("img" + std::to_string(i) + ".ppm")).string(), im);
            stamp++;
        }
    }
}

data::DatasetListing synthetic_listing(const std::vector<int64_t>& class_sizes) {
    data::DatasetListing listing;
    for (size_t c = 0; c < class_sizes.size(); ++c) {
        listing.catalog.names.push_back("class" + std::to_string(c));
        listing.catalog.counts.push_back(class_sizes[c]);
        for (int64_t i = 0; i < class_sizes[c]; ++i)
            listing.entries.push_back(
                {"class" + std::to_string(c) + "/f" + std::to_string(i) + ".png", static_cast<int>(c)});
    }
    return listing;
}

} // namespace

TEST_SUITE("dataset") {

TEST_CASE("challenge catalog carries the published counts") {
    const auto cat = data::ClassCatalog::challenge();
    REQUIRE(cat.num_classes() == 7);
    CHECK(cat.names == std::vector<std::string>{"creamy_paste", "diced", "grated", "juiced", "jullienne",
                                                "sliced", "whole"});
    CHECK(cat.counts == std::vector<int64_t>{730, 700, 819, 638, 672, 1315, 1304});
    CHECK(data::kChallengeTotalImages == 5902);
}

TEST_CASE("directory loader: labels, ordering, determinism") {
    testutil::TempDir dir("load");
    write_tree(dir, {{"beta", 2}, {"alpha", 2}});
    const auto r1 = data::load_dataset(dir.str());
    REQUIRE(r1.samples.size() == 4);
    CHECK(r1.catalog.names == std::vector<std::string>{"alpha", "beta"}); // alphabetical
    CHECK(r1.samples[0].label == 0);
    CHECK(r1.samples[1].label == 0);
    CHECK(r1.samples[2].label == 1);
    CHECK(r1.samples[3].label == 1);
    CHECK(r1.skipped == 0);

    const auto r2 = data::load_dataset(dir.str());
    for (size_t i = 0; i < 4; ++i) CHECK(r1.samples[i].source_path == r2.samples[i].source_path);

    // parallel decode keeps the same order
    const auto r3 = data::load_dataset(dir.str(), 4);
    for (size_t i = 0; i < 4; ++i) CHECK(r1.samples[i].source_path == r3.samples[i].source_path);
}

TEST_CASE("non-image files are ignored by the listing") {
    testutil::TempDir dir("mixed");
    write_tree(dir, {{"a", 2}});
    std::ofstream notes(dir.path() / "a" / "notes.txt");
    notes << "not an image";
    notes.close();
    const auto listing = data::list_dataset(dir.str());
    CHECK(listing.entries.size() == 2);
}

TEST_CASE("load_paths: order independent of worker count, labels from class rank") {
    testutil::TempDir dir("paths");
    write_tree(dir, {{"x", 3}, {"y", 2}});
    const std::vector<std::string> names{"x", "y"};
    const std::vector<std::string> rel{"y/img0.ppm", "x/img2.ppm", "x/img0.ppm"};
    const auto one = data::load_paths(dir.str(), names, rel, 1);
    const auto four = data::load_paths(dir.str(), names, rel, 4);
    REQUIRE(one.size() == 3);
    CHECK(one[0].label == 1);
    CHECK(one[1].label == 0);
    CHECK(one[2].label == 0);
    for (size_t i = 0; i < rel.size(); ++i) {
        CHECK(one[i].source_path == rel[i]);
        CHECK(four[i].source_path == rel[i]);
        for (int64_t j = 0; j < one[i].pixels.numel(); ++j)
            CHECK(one[i].pixels.data()[j] == four[i].pixels.data()[j]);
    }
    CHECK_THROWS_AS(data::load_paths(dir.str(), names, {"z/img0.ppm"}, 1), IoError);
}

TEST_CASE("directory loader: unreadable file warns and skips, empty class is fatal") {
    testutil::TempDir dir("skip");
    write_tree(dir, {{"a", 2}});
    std::ofstream bad(dir.path() / "a" / "broken.png");
    bad << "not a png";
    bad.close();
    const auto r = data::load_dataset(dir.str());
    CHECK(r.samples.size() == 2);
    CHECK(r.skipped == 1);

    fs::create_directories(dir.path() / "empty_class");
    CHECK_THROWS_AS(data::load_dataset(dir.str()), IoError);
}

TEST_CASE("decoders agree across formats") {
    testutil::TempDir dir("fmt");
    std::mt19937_64 rng(3);
    core::TensorF im = testutil::rand_tensor<float>({9, 7, 3}, rng, 0, 1);
    img::write_ppm(dir.str("x.ppm"), im);
    img::write_png(dir.str("x.png"), im);
    const auto a = img::decode_image(dir.str("x.ppm"));
    const auto b = img::decode_image(dir.str("x.png"));
    REQUIRE(a.shape() == b.shape());
    for (int64_t i = 0; i < a.numel(); ++i) CHECK(a.data()[i] == b.data()[i]); // both 8-bit quantized
}

TEST_CASE("jpeg decode") {
    testutil::TempDir dir("jpeg");
    // encode a flat image with libjpeg directly; decode through the module
    const int w = 16, h = 12;
    std::vector<unsigned char> rgb(static_cast<size_t>(w) * h * 3);
    for (size_t i = 0; i < rgb.size(); i += 3) {
        rgb[i] = 200;
        rgb[i + 1] = 60;
        rgb[i + 2] = 130;
    }
    const std::string path = dir.str("x.jpg");
    {
        FILE* f = fopen(path.c_str(), "wb");
        REQUIRE(f != nullptr);
        jpeg_compress_struct cinfo;
        jpeg_error_mgr jerr;
        cinfo.err = jpeg_std_error(&jerr);
        jpeg_create_compress(&cinfo);
        jpeg_stdio_dest(&cinfo, f);
        cinfo.image_width = w;
        cinfo.image_height = h;
        cinfo.input_components = 3;
        cinfo.in_color_space = JCS_RGB;
        jpeg_set_defaults(&cinfo);
        jpeg_set_quality(&cinfo, 95, TRUE);
        jpeg_start_compress(&cinfo, TRUE);
        while (cinfo.next_scanline < cinfo.image_height) {
            unsigned char* row = rgb.data() + static_cast<size_t>(cinfo.next_scanline) * w * 3;
            jpeg_write_scanlines(&cinfo, &row, 1);
        }
        jpeg_finish_compress(&cinfo);
        jpeg_destroy_compress(&cinfo);
        fclose(f);
    }
    const auto decoded = img::decode_image(path);
    REQUIRE(decoded.shape() == core::Shape{h, w, 3});
    // lossy codec: loose tolerance on a flat image
    CHECK(decoded(5, 5, 0) == doctest::Approx(200.0 / 255.0).epsilon(0.05));
    CHECK(decoded(5, 5, 1) == doctest::Approx(60.0 / 255.0).epsilon(0.05));
    CHECK(decoded(5, 5, 2) == doctest::Approx(130.0 / 255.0).epsilon(0.05));
}

TEST_CASE("resize: identity, constants, checkerboard oracle") {
    std::mt19937_64 rng(4);
    core::TensorF im = testutil::rand_tensor<float>({5, 5, 3}, rng, 0, 1);
    const auto same = data::resize_bilinear(im, 5, 5);
    for (int64_t i = 0; i < im.numel(); ++i) CHECK(same.data()[i] == im.data()[i]); // bitwise

    core::TensorF flat = core::TensorF::full({3, 4, 3}, 0.625f);
    const auto up = data::resize_bilinear(flat, 7, 9);
    for (int64_t i = 0; i < up.numel(); ++i) CHECK(up.data()[i] == doctest::Approx(0.625f));

    // 2x2 checkerboard {0,1} to 4x4: interior weights from half-pixel centers.
    // dst x=1 -> src 0.25, x=2 -> 0.75; bilinear of [[0,1],[1,0]]:
    //   (0.25,0.25): .5625*0+.1875*1+.1875*1+.0625*0 = 0.375
    //   (0.25,0.75): 0.625   (symmetry across the diagonal)
    core::TensorF board({2, 2, 1});
    board(0, 0, 0) = 0.0f;
    board(0, 1, 0) = 1.0f;
    board(1, 0, 0) = 1.0f;
    board(1, 1, 0) = 0.0f;
    const auto four = data::resize_bilinear(board, 4, 4);
    CHECK(four(1, 1, 0) == doctest::Approx(0.375).epsilon(1e-6));
    CHECK(four(1, 2, 0) == doctest::Approx(0.625).epsilon(1e-6));
    CHECK(four(2, 1, 0) == doctest::Approx(0.625).epsilon(1e-6));
    CHECK(four(2, 2, 0) == doctest::Approx(0.375).epsilon(1e-6));

    // range preservation
    float lo = 2.0f, hi = -1.0f;
    for (float v : four.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo >= 0.0f);
    CHECK(hi <= 1.0f);
}

TEST_CASE("standardize: moments, constants, idempotence") {
    core::TensorF flat = core::TensorF::full({4, 4, 3}, 0.77f);
    const auto z = data::standardize(flat);
    for (float v : z.data()) CHECK(v == 0.0f); // sigma floor

    core::TensorF pair({1, 2, 1});
    pair(0, 0, 0) = 0.0f;
    pair(0, 1, 0) = 1.0f;
    const auto pm = data::standardize(pair);
    CHECK(pm.data()[0] == doctest::Approx(-1.0f));
    CHECK(pm.data()[1] == doctest::Approx(1.0f));

    std::mt19937_64 rng(5);
    core::TensorF im = testutil::rand_tensor<float>({8, 8, 3}, rng, 0, 1);
    const auto s1 = data::standardize(im);
    double mu = 0, var = 0;
    for (float v : s1.data()) mu += v;
    mu /= static_cast<double>(s1.numel());
    for (float v : s1.data()) var += (v - mu) * (v - mu);
    var /= static_cast<double>(s1.numel());
    CHECK(std::fabs(mu) < 1e-5);
    CHECK(std::fabs(std::sqrt(var) - 1.0) < 1e-4);

    const auto s2 = data::standardize(s1);
    for (int64_t i = 0; i < s1.numel(); ++i) CHECK(s2.data()[i] == doctest::Approx(s1.data()[i]).epsilon(1e-5));
}

TEST_CASE("split: floor rounding with remainder to train") {
    const auto listing = synthetic_listing({100});
    data::SplitSpec spec;
    spec.mode = data::SplitMode::Fractions;
    spec.test_fraction = 0.15;
    spec.val_from_train = 0.15;
    spec.stratified = false;
    spec.seed = 1;
    const auto m = data::split_dataset(listing, spec);
    CHECK(m.train.size() == 73);
    CHECK(m.val.size() == 12);
    CHECK(m.test.size() == 15);
}

TEST_CASE("split: partition, determinism, seed sensitivity") {
    const auto listing = synthetic_listing({37, 53, 21});
    data::SplitSpec spec;
    spec.seed = 7;
    const auto m1 = data::split_dataset(listing, spec);
    const auto m2 = data::split_dataset(listing, spec);
    CHECK(m1.train == m2.train);
    CHECK(m1.val == m2.val);
    CHECK(m1.test == m2.test);

    std::set<std::string> all;
    for (const auto* v : {&m1.train, &m1.val, &m1.test})
        for (const auto& p : *v) CHECK(all.insert(p).second); // disjoint
    CHECK(all.size() == listing.entries.size());              // exhaustive

    data::SplitSpec other = spec;
    other.seed = 8;
    const auto m3 = data::split_dataset(listing, other);
    CHECK(m3.train != m1.train);
}

TEST_CASE("split: stratified proportions within one sample") {
    const auto listing = synthetic_listing({40, 80, 120});
    data::SplitSpec spec;
    spec.test_fraction = 0.25;
    spec.val_from_train = 0.1;
    spec.stratified = true;
    spec.seed = 42;
    const auto m = data::split_dataset(listing, spec);

    auto count_class = [](const std::vector<std::string>& paths, int c) {
        const std::string prefix = "class" + std::to_string(c) + "/";
        int64_t n = 0;
        for (const auto& p : paths)
            if (p.rfind(prefix, 0) == 0) n++;
        return n;
    };
    const double global_test = static_cast<double>(m.test.size()) / 240.0;
    const std::vector<int64_t> sizes{40, 80, 120};
    for (int c = 0; c < 3; ++c) {
        const double expected = global_test * static_cast<double>(sizes[static_cast<size_t>(c)]);
        CHECK(std::fabs(static_cast<double>(count_class(m.test, c)) - expected) <= 1.0);
    }
}

TEST_CASE("split: explicit counts partition exactly") {
    std::vector<int64_t> sizes{730, 700, 819, 638, 672, 1315, 1028}; // 5902 total
    const auto listing = synthetic_listing(sizes);
    REQUIRE(listing.entries.size() == 5902);
    data::SplitSpec spec;
    spec.mode = data::SplitMode::Counts;
    spec.count_train = 4106;
    spec.count_val = 728;
    spec.count_test = 1068;
    spec.seed = 3;
    for (bool strat : {false, true}) {
        spec.stratified = strat;
        const auto m = data::split_dataset(listing, spec);
        CHECK(m.train.size() == 4106);
        CHECK(m.val.size() == 728);
        CHECK(m.test.size() == 1068);
    }
    spec.count_test = 2000; // no longer a partition
    CHECK_THROWS_AS(data::split_dataset(listing, spec), ValueError);
}

TEST_CASE("manifest round trip") {
    testutil::TempDir dir("manifest");
    const auto listing = synthetic_listing({10, 14});
    data::SplitSpec spec;
    spec.seed = 99;
    spec.test_fraction = 0.25;
    const auto m = data::split_dataset(listing, spec);
    m.save(dir.str("split.manifest"));
    const auto r = data::SplitManifest::load(dir.str("split.manifest"));
    CHECK(r.spec.seed == 99);
    CHECK(r.spec.test_fraction == doctest::Approx(0.25));
    CHECK(r.train == m.train);
    CHECK(r.val == m.val);
    CHECK(r.test == m.test);

    // byte-identical rewrite
    m.save(dir.str("again.manifest"));
    std::ifstream f1(dir.str("split.manifest"), std::ios::binary);
    std::ifstream f2(dir.str("again.manifest"), std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
}

} // TEST_SUITE("dataset")
