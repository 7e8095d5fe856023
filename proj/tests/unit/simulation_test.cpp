#include <gtest/gtest.h>

#include "orchestrion/simulation.hpp"
#include "orchestrion/traces.hpp"

using namespace orchestrion;

namespace {

Event event(std::int64_t t, nlohmann::json data)
{
    Event e;
    e.t = t;
    e.type = "admission";
    e.data = std::move(data);
    return e;
}

ScenarioConfig small()
{
    return parse_scenario(nlohmann::json::parse(R"({
        "name": "small",
        "duration_s": 200,
        "devices": [{"id": "10.0.0.1"}],
        "images": [{"owner": "v", "name": "m", "workload": {"pattern": 1, "class": "mem_dominant"},
                    "request": {"cpu": 50, "mem": 150}, "base": {"cpu": 25, "mem": 100}}],
        "requests": [{"id": "w1", "owner": "v", "image": "m", "at": 0},
                     {"id": "w2", "owner": "v", "image": "m", "at": 30}],
        "expectations": [
            {"kind": "sequence", "event": "admission",
             "expect": [{"deployment": "w1", "decision": "accept", "t": 0},
                        {"deployment": "w2", "decision": "accept", "avail": {"mem": {"lt": 1000}}}]},
            {"kind": "count", "event": "deployed", "equals": 2},
            {"kind": "final_state", "deployment": "w2", "state": "running"}
        ]
    })"));
}

} // namespace

TEST(EventMatching, DottedPathsAndComparisons)
{
    const nlohmann::json data{{"target", {{"mem", 150}, {"cpu", 50}}}, {"decision", "accept"}};
    ASSERT_NE(lookup_path(data, "target.mem"), nullptr);
    EXPECT_EQ(*lookup_path(data, "target.mem"), 150);
    EXPECT_EQ(lookup_path(data, "target.disk"), nullptr);
    EXPECT_EQ(lookup_path(data, "decision.x"), nullptr);

    const Event e = event(40, data);
    EXPECT_TRUE(event_matches(e, {{"t", 40}, {"decision", "accept"}}));
    EXPECT_FALSE(event_matches(e, {{"t", 41}}));
    EXPECT_TRUE(event_matches(e, {{"target.mem", 150.0000000001}}));
    EXPECT_TRUE(event_matches(e, {{"target", {{"mem", {{"gt", 100}}}}}}));
    EXPECT_FALSE(event_matches(e, {{"target", {{"cpu", {{"lt", 50}}}}}}));
    EXPECT_FALSE(event_matches(e, {{"missing", 1}}));
}

TEST(Cluster, SmallScenarioPassesItsExpectations)
{
    const auto report = run_scenario(small());
    for (const auto& r : report.expectations) {
        EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
    }
    EXPECT_TRUE(report.passed());
    EXPECT_EQ(report.duration_s, 200);
    // One trace row per running container per scrape: w1 scraped at 10..190, w2 at 40..190.
    EXPECT_EQ(report.trace.size(), 19U + 16U);
}

TEST(Cluster, FailingExpectationIsReported)
{
    auto config = small();
    config.expectations.push_back(Expectation{"wrong", "count", {{"event", "deployed"}, {"equals", 3}}});
    config.expectations.push_back(Expectation{"bogus", "no_such_check", nlohmann::json::object()});
    const auto report = run_scenario(config);
    EXPECT_FALSE(report.passed());
    EXPECT_FALSE(report.expectations[3].passed);
    EXPECT_EQ(report.expectations[3].detail, "count 2");
    EXPECT_NE(report.expectations[4].detail.find("unknown expectation kind"), std::string::npos);
}

TEST(Cluster, SameSeedSameOutput)
{
    const auto config = builtin_scenario("exp3_cpu");
    const auto a = run_scenario(config, 1234);
    const auto b = run_scenario(config, 1234);
    EXPECT_EQ(a.events_jsonl(), b.events_jsonl());
    EXPECT_EQ(metrics_csv(a.trace), metrics_csv(b.trace));
    const auto c = run_scenario(config, 99);
    EXPECT_NE(metrics_csv(a.trace), metrics_csv(c.trace));
}

TEST(Cluster, ScenarioLoadedFromJsonBehavesLikeTheBuiltin)
{
    const auto builtin = builtin_scenario("exp1_mem");
    const auto loaded = parse_scenario(nlohmann::json(builtin));
    const auto a = run_scenario(builtin);
    const auto b = run_scenario(loaded);
    EXPECT_EQ(a.events_jsonl(), b.events_jsonl());
    ASSERT_EQ(a.expectations.size(), b.expectations.size());
    for (std::size_t i = 0; i < a.expectations.size(); ++i) {
        EXPECT_EQ(a.expectations[i].passed, b.expectations[i].passed) << a.expectations[i].name;
        EXPECT_TRUE(b.expectations[i].passed) << b.expectations[i].name << ": " << b.expectations[i].detail;
    }
}

TEST(Traces, CsvHasFixedHeaderAndPrecision)
{
    TraceRow r;
    r.t = 10;
    r.container = "w1";
    r.cpu_util = 12.34567;
    r.cpu_limit = 50;
    r.cpu_throttle = 0;
    r.mem_util = 95;
    r.mem_limit = 150;
    r.status = "running";
    const auto csv = metrics_csv({r});
    EXPECT_EQ(csv, std::string(kMetricsCsvHeader) + "\n10,w1,12.346,50,0.000,95.000,150,running\n");
    TraceRow other = r;
    other.container = "w2";
    EXPECT_EQ(container_csv({r, other}, "w2"), std::string(kMetricsCsvHeader) + "\n10,w2,12.346,50,0.000,95.000,150,running\n");
}

TEST(Traces, SummaryListsExpectations)
{
    const auto report = run_scenario(small());
    const auto s = summary_json(report);
    EXPECT_EQ(s.at("scenario"), "small");
    EXPECT_EQ(s.at("expectations").size(), 3U);
    EXPECT_TRUE(s.at("passed").get<bool>());
}
