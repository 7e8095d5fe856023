#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "orchestrion/registry.hpp"

using namespace orchestrion;

namespace {

ImageBlob blob(std::string text)
{
    ImageBlob b;
    b.layers.push_back(to_bytes(text));
    return b;
}

struct TempDir {
    std::filesystem::path path;
    TempDir()
        : path(std::filesystem::temp_directory_path() /
               ("orchestrion-registry-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name()))
    {
        std::filesystem::remove_all(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

const OwnerId alice{"alice"};
const OwnerId bob{"bob"};

} // namespace

TEST(ContentHash, KnownSha256Vector)
{
    EXPECT_EQ(content_hash(to_bytes("abc")).hex, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(content_hash(to_bytes("")).hex, "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Registry, PublishAndResolve)
{
    Registry reg;
    const auto h = reg.publish_image(alice, alice, ImageName{"app"}, blob("v1"), make_limits(200, 128),
                                     make_limits(100, 64));
    const auto rec = reg.get_image(alice, ImageName{"app"});
    EXPECT_EQ(rec.image_hash, h);
    EXPECT_EQ(rec.request(), make_limits(200, 128));
    EXPECT_EQ(rec.base(), make_limits(100, 64));
    EXPECT_EQ(reg.fetch_blob(h), blob("v1"));
    EXPECT_THROW(reg.get_image(bob, ImageName{"app"}), NotFoundError);
}

TEST(Registry, OwnershipIsEnforced)
{
    Registry reg;
    reg.publish_image(alice, alice, ImageName{"app"}, blob("v1"), make_limits(200, 128), make_limits(100, 64));
    EXPECT_THROW(reg.publish_image(bob, alice, ImageName{"app"}, blob("evil"), make_limits(200, 128),
                                   make_limits(100, 64)),
                 OwnershipError);
    EXPECT_EQ(reg.fetch_blob(reg.get_image(alice, ImageName{"app"}).image_hash), blob("v1"));
    reg.publish_image(alice, alice, ImageName{"app"}, blob("v2"), make_limits(300, 128), make_limits(100, 64));
    const auto history = reg.history(alice, ImageName{"app"});
    ASSERT_EQ(history.size(), 2U);
    EXPECT_LT(history[0].revision, history[1].revision);
    EXPECT_EQ(reg.get_image(alice, ImageName{"app"}).request_limit_cpu, 300);
}

TEST(Registry, RejectsInvalidPublications)
{
    Registry reg;
    EXPECT_THROW(reg.publish_image(alice, alice, ImageName{"x"}, ImageBlob{}, make_limits(200, 128),
                                   make_limits(100, 64)),
                 ContractViolation);
    EXPECT_THROW(reg.publish_image(alice, alice, ImageName{"x"}, blob("a"), make_limits(100, 64),
                                   make_limits(200, 128)),
                 ContractViolation);
}

TEST(Registry, PersistsAndReplays)
{
    TempDir dir;
    ContentHash h;
    {
        Registry reg(dir.path);
        h = reg.publish_image(alice, alice, ImageName{"app"}, blob("v1"), make_limits(200, 128), make_limits(100, 64));
        MetricsSeries s;
        s.key = "c1";
        s.append(SeriesPoint{10, 1.0, 2.0, 0.0, 100, 64});
        reg.archive_metrics(DeviceId{"10.0.0.1"}, s);
    }
    EXPECT_TRUE(std::filesystem::exists(dir.path / "ledger.jsonl"));
    EXPECT_TRUE(std::filesystem::exists(dir.path / "store" / "ALGORITHM"));
    Registry again(dir.path);
    EXPECT_EQ(again.get_image(alice, ImageName{"app"}).image_hash, h);
    const auto archived = again.archived_metrics(DeviceId{"10.0.0.1"});
    ASSERT_EQ(archived.size(), 1U);
    EXPECT_EQ(again.fetch_metrics(archived[0]).points.size(), 1U);
    EXPECT_EQ(again.ledger_size(), 2U);
}

TEST(Registry, DetectsTamperedLayer)
{
    TempDir dir;
    Registry reg(dir.path);
    const auto h = reg.publish_image(alice, alice, ImageName{"app"}, blob("payload"), make_limits(200, 128),
                                     make_limits(100, 64));
    const auto layer = content_hash(to_bytes("payload"));
    {
        std::ofstream out(dir.path / "store" / layer.hex, std::ios::binary | std::ios::trunc);
        out << "paylOad";
    }
    EXPECT_THROW(reg.fetch_blob(h), TamperError);
    EXPECT_THROW(reg.fetch_layer(ContentHash{std::string(64, '0')}), NotFoundError);
}
