#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "dds/checkpoint.hpp"
#include "test_util.hpp"

using namespace dds;

TEST(Base64, KnownVectors) {
    EXPECT_EQ(base64_encode(""), "");
    EXPECT_EQ(base64_encode("f"), "Zg==");
    EXPECT_EQ(base64_encode("fo"), "Zm8=");
    EXPECT_EQ(base64_encode("foo"), "Zm9v");
    EXPECT_EQ(base64_encode("foobar"), "Zm9vYmFy");
    EXPECT_EQ(base64_decode("Zm9vYg=="), "foob");
}

TEST(Base64, RejectsMalformed) {
    EXPECT_THROW(base64_decode("abc"), std::invalid_argument);
    EXPECT_THROW(base64_decode("ab!d"), std::invalid_argument);
    EXPECT_THROW(base64_decode("a=bc"), std::invalid_argument);
}

TEST(Base64, RealsAreLittleEndian) {
    const std::vector<Real> one = {1.0};
    // 1.0 = 0x3FF0000000000000, stored low byte first.
    EXPECT_EQ(base64_decode(encode_reals(one)), std::string("\0\0\0\0\0\0\xF0\x3F", 8));
}

TEST(Base64, SpecialValuesRoundTrip) {
    const std::vector<Real> v = {0.0, -0.0, 1e-310, std::numeric_limits<Real>::infinity(),
                                 std::nextafter(1.0, 2.0), -123.456};
    const auto back = decode_reals(encode_reals(v));
    ASSERT_EQ(back.size(), v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        EXPECT_EQ(std::signbit(back[i]), std::signbit(v[i]));
        EXPECT_EQ(back[i], v[i]);
    }
}

TEST(Checkpoint, RoundTripIsBitExact) {
    BackboneConfig b;
    b.stage_channels = {2, 3, 3, 4, 4};
    VariantId v;
    v.converter_units = 3;
    v.converter_residual = false;
    Checkpoint ckpt;
    ckpt.model = build_variant(v, b, 3, 42);
    std::uint64_t seed = 5;
    for (auto& p : ckpt.model.params) p.value = fixtures::random_tensor(p.value.shape(), seed++);
    ckpt.iteration = 17;
    ckpt.extra_json = R"({"note":"x"})";

    const auto path = std::filesystem::temp_directory_path() / "dds_ckpt_test.json";
    save_checkpoint(ckpt, path.string());
    const Checkpoint back = load_checkpoint(path.string());
    std::filesystem::remove(path);

    EXPECT_EQ(back.iteration, 17);
    EXPECT_EQ(back.model.variant.converter_units, 3);
    EXPECT_FALSE(back.model.variant.converter_residual);
    EXPECT_EQ(back.model.seed, 42u);
    EXPECT_EQ(back.model.backbone.stage_channels, b.stage_channels);
    ASSERT_EQ(back.model.params.size(), ckpt.model.params.size());
    for (std::size_t i = 0; i < back.model.params.size(); ++i) {
        EXPECT_EQ(back.model.params[i].name, ckpt.model.params[i].name);
        EXPECT_EQ(back.model.params[i].value, ckpt.model.params[i].value);
    }
    EXPECT_EQ(back.extra_json, R"({"note":"x"})");
    EXPECT_EQ(to_json(back), to_json(ckpt));
}

TEST(Checkpoint, RejectsMismatchedParameters) {
    BackboneConfig b;
    b.stage_channels = {2, 3, 3, 4, 4};
    Checkpoint ckpt;
    ckpt.model = build_variant(VariantId{}, b, 2, 1);
    std::string text = to_json(ckpt);
    const auto at = text.find("\"stage1.entry.weight\"");
    ASSERT_NE(at, std::string::npos);
    text.replace(at, 21, "\"stage1.entry.wrong\"");
    EXPECT_THROW(checkpoint_from_json(text), std::runtime_error);
    EXPECT_THROW(checkpoint_from_json("{"), std::runtime_error);
    EXPECT_THROW(checkpoint_from_json(R"({"format":"other"})"), std::runtime_error);
}

TEST(Checkpoint, MissingFile) {
    EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.json"), std::runtime_error);
}
