#include <gtest/gtest.h>

#include "orchestrion/monitor.hpp"

using namespace orchestrion;

TEST(RetryTarget, LadderFollowsBasePlusScaleSteps)
{
    const OptimizationPolicy policy;
    const auto request = make_limits(50, 15);
    const auto base = make_limits(25, 10);
    EXPECT_EQ(retry_target(1, request, base, request, policy, ResourceAmount{500}), request);
    EXPECT_EQ(retry_target(2, request, base, request, policy, ResourceAmount{500}), make_limits(50, 10));
    EXPECT_EQ(retry_target(3, request, base, base, policy, ResourceAmount{500}), make_limits(25, 30));
    EXPECT_EQ(retry_target(7, request, base, base, policy, ResourceAmount{500}), make_limits(25, 110));
    EXPECT_EQ(retry_target(40, request, base, base, policy, ResourceAmount{500}), make_limits(25, 500));
    EXPECT_THROW(retry_target(0, request, base, base, policy, ResourceAmount{500}), ContractViolation);
}

TEST(Monitor, ScrapePublishesMonitoringResult)
{
    Bus bus(DeviceId{"10.0.0.1"});
    Host host;
    Knowledge knowledge;
    EventLog log;
    Monitor monitor(bus, knowledge, host, nullptr, OptimizationPolicy{}, MonitorConfig{}, &log);
    auto sub = bus.subscribe(Topic::monitor);
    host.run_container(ContainerId{"c"}, make_workload(1, WorkloadClass::mem_dominant), make_limits(50, 150));
    for (int i = 0; i < 10; ++i) {
        host.tick();
    }
    EXPECT_TRUE(monitor.scrape_due(10));
    EXPECT_FALSE(monitor.scrape_due(11));
    monitor.scrape_and_publish();
    auto d = bus.poll();
    ASSERT_TRUE(d);
    EXPECT_EQ(d->msg.action, Action::monitoring_result);
    EXPECT_EQ(d->msg.payload.at("device"), "10.0.0.1");
    EXPECT_EQ(d->msg.payload.at("allocatable").at("mem"), 850);
    EXPECT_EQ(d->msg.payload.at("containers").size(), 1U);
    ASSERT_NE(knowledge.series("c"), nullptr);
    EXPECT_EQ(knowledge.series("c")->points.size(), 1U);
}

TEST(Monitor, OomKillTriggersRetryRequest)
{
    Bus bus(DeviceId{"10.0.0.1"});
    Host host;
    Knowledge knowledge;
    EventLog log;
    Monitor monitor(bus, knowledge, host, nullptr, OptimizationPolicy{}, MonitorConfig{}, &log);
    auto deploy = bus.subscribe(Topic::deploy);

    DeploymentRecord dep;
    dep.id = DeploymentId{"w1"};
    dep.owner = OwnerId{"vendor"};
    dep.image = ImageName{"memory3"};
    dep.request = make_limits(50, 15);
    dep.base = make_limits(25, 10);
    dep.state = DeploymentState::running;
    knowledge.put_deployment(dep);
    ContainerRecord rec;
    rec.id = ContainerId{"w1"};
    rec.deployment = dep.id;
    rec.limits = dep.request;
    knowledge.add_container(rec);
    host.run_container(rec.id, make_workload(3, WorkloadClass::mem_dominant), rec.limits);

    const auto published = monitor.detect_premature_exit(host.tick());
    ASSERT_EQ(published.size(), 1U);
    EXPECT_EQ(published[0].payload.at("attempt"), 2);
    EXPECT_EQ(published[0].payload.at("target").at("mem"), 10);
    EXPECT_EQ(log.of_type("oom_kill").size(), 1U);
    EXPECT_EQ(log.of_type("retry").size(), 1U);
    EXPECT_EQ(knowledge.container(rec.id).status, ContainerStatus::killed_oom);
}

TEST(Monitor, GivesUpAfterMaxAttempts)
{
    Bus bus(DeviceId{"10.0.0.1"});
    Host host;
    Knowledge knowledge;
    EventLog log;
    MonitorConfig cfg;
    cfg.max_attempts = 2;
    Monitor monitor(bus, knowledge, host, nullptr, OptimizationPolicy{}, cfg, &log);
    DeploymentRecord dep;
    dep.id = DeploymentId{"w"};
    dep.request = make_limits(50, 15);
    dep.base = make_limits(25, 10);
    knowledge.put_deployment(dep);
    ContainerRecord rec;
    rec.id = ContainerId{"w.r1"};
    rec.deployment = dep.id;
    rec.attempt = 2;
    rec.limits = dep.base;
    knowledge.add_container(rec);
    host.run_container(rec.id, make_workload(3, WorkloadClass::mem_dominant), rec.limits);
    EXPECT_TRUE(monitor.detect_premature_exit(host.tick()).empty());
    EXPECT_EQ(knowledge.deployment(dep.id).state, DeploymentState::failed);
    EXPECT_EQ(log.of_type("give_up").size(), 1U);
}

TEST(Monitor, RetentionArchivesOldPointsToRegistry)
{
    Bus bus(DeviceId{"10.0.0.1"});
    Host host;
    Knowledge knowledge(30);
    Registry registry;
    MonitorConfig cfg;
    cfg.retention_s = 30;
    cfg.archive_every_s = 10;
    Monitor monitor(bus, knowledge, host, &registry, OptimizationPolicy{}, cfg, nullptr);
    host.run_container(ContainerId{"c"}, make_workload(1, WorkloadClass::mem_dominant), make_limits(50, 150));
    for (int round = 0; round < 10; ++round) {
        for (int i = 0; i < 10; ++i) {
            host.tick();
        }
        monitor.scrape_and_publish();
    }
    const auto written = monitor.enforce_retention(true);
    EXPECT_FALSE(written.empty());
    for (const auto& point : knowledge.series("c")->points) {
        EXPECT_GE(point.t, host.now() - 30);
    }
    const auto archived = registry.archived_metrics(DeviceId{"10.0.0.1"});
    EXPECT_EQ(archived.size(), written.size());
    std::size_t total = 0;
    for (const auto& h : archived) {
        const auto s = registry.fetch_metrics(h);
        if (s.key == "c") {
            total += s.points.size();
        }
    }
    EXPECT_EQ(total + knowledge.series("c")->points.size(), 10U);
}

TEST(Monitor, SchedulesOptimizationOncePerInterval)
{
    Bus bus(DeviceId{"10.0.0.1"});
    Host host;
    Knowledge knowledge;
    Monitor monitor(bus, knowledge, host, nullptr, OptimizationPolicy{}, MonitorConfig{}, nullptr);
    auto analyze = bus.subscribe(Topic::analyze);
    ContainerRecord a;
    a.id = ContainerId{"a"};
    a.next_optimization = 0;
    knowledge.add_container(a);
    ContainerRecord b;
    b.id = ContainerId{"b"};
    b.next_optimization = 0;
    knowledge.add_container(b);
    EXPECT_EQ(monitor.schedule_optimization(), 2U);
    EXPECT_EQ(monitor.schedule_optimization(), 0U);
    EXPECT_EQ(knowledge.container(a.id).next_optimization, 300);
    auto first = bus.poll();
    ASSERT_TRUE(first);
    EXPECT_EQ(first->msg.payload.at("batch"), 2);
    EXPECT_EQ(first->msg.payload.at("container_id"), "a");
}
