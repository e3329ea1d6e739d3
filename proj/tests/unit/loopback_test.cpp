#include <gtest/gtest.h>

#include <condition_variable>
#include <mutex>
#include <thread>

#include "fixtures.hpp"
#include "httplib.h"
#include "sgs/annotation.hpp"
#include "sgs/clients.hpp"
#include "sgs/daemon.hpp"
#include "sgs/sim.hpp"

namespace sgs {
namespace {

using namespace std::chrono_literals;

class LoopbackTest : public ::testing::Test {
protected:
    void SetUp() override {
        daemon = std::make_unique<service::GatewayDaemon>(testing::sample_config());
        daemon->start();
    }
    void TearDown() override { daemon->stop(); }

    net::Address coap() const { return net::Address::loopback(daemon->coap_port()); }
    net::Address mqtt() const { return net::Address::loopback(daemon->mqtt_port()); }
    sim::Endpoints endpoints() const {
        return {coap(), mqtt(), net::Address::loopback(daemon->http_port())};
    }

    std::unique_ptr<service::GatewayDaemon> daemon;
};

/// Collects PUBLISH payloads from an MqttClient callback.
struct Inbox {
    void push(const mqtt::Publish& p) {
        std::lock_guard lock(mutex);
        items.push_back(p);
        cv.notify_all();
    }
    bool wait_for(std::size_t n, std::chrono::milliseconds timeout) {
        std::unique_lock lock(mutex);
        return cv.wait_for(lock, timeout, [&] { return items.size() >= n; });
    }
    std::mutex mutex;
    std::condition_variable cv;
    std::vector<mqtt::Publish> items;
};

TEST_F(LoopbackTest, CoapPostReachesMqttAndRest) {
    Inbox inbox;
    sim::MqttClient sub(mqtt(), "viewer", std::nullopt, [&](const mqtt::Publish& p) { inbox.push(p); });
    ASSERT_EQ(sub.subscribe({{"obs/sensors/s1/temp", 0}}), std::vector<std::uint8_t>{0});

    sim::CoapClient sensor(coap());
    const auto resp = sensor.post("sensors/s1/temp", R"({"sensor":"s1","value":22.5,"unit":"Cel"})",
                                  coap::content_format::json);
    EXPECT_EQ(resp.code, coap::codes::changed);
    EXPECT_EQ(resp.type, coap::MessageType::ack);

    ASSERT_TRUE(inbox.wait_for(1, 2s));
    EXPECT_FALSE(inbox.wait_for(2, 200ms));
    const auto& pub = inbox.items.front();
    EXPECT_EQ(pub.topic.str(), "obs/sensors/s1/temp");
    const std::string body(pub.payload.begin(), pub.payload.end());
    EXPECT_TRUE(annotation::check_shape(annotation::from_jsonld(body)).exact());

    httplib::Client http("127.0.0.1", daemon->http_port());
    const auto res = http.Get("/topics/obs/sensors/s1/temp/latest");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(res->body, body);

    const auto get = sensor.get("sensors/s1/temp");
    EXPECT_EQ(get.code, coap::codes::content);
    EXPECT_EQ(std::string(get.payload.begin(), get.payload.end()), R"({"sensor":"s1","value":22.5,"unit":"Cel"})");
}

TEST_F(LoopbackTest, MqttPublishReachesRest) {
    sim::MqttClient sensor(mqtt(), "sensor-s2");
    sensor.publish("raw/sensors/s2/reading", "<reading value=\"18.25\"/>", 1);
    httplib::Client http("127.0.0.1", daemon->http_port());
    const auto res = http.Get("/topics/obs/sensors/s2/reading/latest");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200);
    EXPECT_NE(res->body.find("18.25"), std::string::npos);
    const auto topics = http.Get("/topics");
    ASSERT_TRUE(topics);
    EXPECT_NE(topics->body.find("obs/sensors/s2/reading"), std::string::npos);
}

TEST_F(LoopbackTest, CoapObserveNotifications) {
    sim::CoapClient observer(coap());
    sim::CoapClient sensor(coap());
    sensor.post("sensors/s3/humidity", R"({"value":40})", std::nullopt);

    const auto first = observer.get("sensors/s3/humidity", 0);
    ASSERT_EQ(first.code, coap::codes::content);
    EXPECT_EQ(first.uint_option(coap::option::observe), 0u);

    std::uint32_t last_seq = 0;
    for (int i = 0; i < 3; ++i) {
        sensor.post("sensors/s3/humidity", R"({"value":)" + std::to_string(41 + i) + "}", std::nullopt);
        const auto n = observer.next_notification(2s);
        ASSERT_TRUE(n);
        EXPECT_EQ(n->code, coap::codes::content);
        EXPECT_EQ(n->token, first.token);
        EXPECT_EQ(n->uint_option(coap::option::content_format), coap::content_format::json);
        const auto seq = n->uint_option(coap::option::observe);
        ASSERT_TRUE(seq);
        EXPECT_GT(*seq, last_seq);
        last_seq = *seq;
        const std::string body(n->payload.begin(), n->payload.end());
        EXPECT_NE(body.find(std::to_string(41 + i)), std::string::npos);
        EXPECT_TRUE(annotation::check_shape(annotation::from_jsonld(body)).exact());
        if (i == 2) {
            coap::Message rst;
            rst.type = coap::MessageType::rst;
            rst.message_id = n->message_id;
            observer.send(rst);
        }
    }
    std::this_thread::sleep_for(200ms);
    sensor.post("sensors/s3/humidity", R"({"value":99})", std::nullopt);
    EXPECT_FALSE(observer.next_notification(500ms));
}

TEST_F(LoopbackTest, CoapPingIsReset) {
    sim::CoapClient client(coap());
    coap::Message ping;
    ping.type = coap::MessageType::con;
    ping.message_id = 4242;
    client.send(ping);
    const auto r = client.next_notification(2s);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->type, coap::MessageType::rst);
    EXPECT_EQ(r->message_id, 4242);
}

TEST_F(LoopbackTest, BrokerRefusesPrivateSubscriptionWithoutToken) {
    sim::MqttClient anon(mqtt(), "anon");
    EXPECT_EQ(anon.subscribe({{"obs/sensors/p1/#", 0}, {"obs/sensors/s1/#", 0}}),
              (std::vector<std::uint8_t>{mqtt::suback_failure, 0}));
}

TEST_F(LoopbackTest, DuplicateClientIdDropsOlderConnection) {
    sim::MqttClient first(mqtt(), "same-id");
    sim::MqttClient second(mqtt(), "same-id");
    for (int i = 0; i < 50 && first.connected(); ++i) std::this_thread::sleep_for(20ms);
    EXPECT_FALSE(first.connected());
    EXPECT_TRUE(second.connected());
}

TEST_F(LoopbackTest, BusySubscriberKeepsItsSessionAlive) {
    Inbox inbox;
    sim::MqttClient sub(mqtt(), "busy-viewer", std::nullopt, [&](const mqtt::Publish& p) { inbox.push(p); }, 1);
    sub.subscribe({{"obs/#", 0}});
    sim::CoapClient sensor(coap());
    // Well past 1.5x the keep-alive with inbound traffic the whole time.
    const auto until = std::chrono::steady_clock::now() + 3s;
    std::size_t sent = 0;
    while (std::chrono::steady_clock::now() < until) {
        sensor.post("sensors/s1/temp", R"({"value":1})", coap::content_format::json);
        ++sent;
        std::this_thread::sleep_for(100ms);
    }
    EXPECT_TRUE(sub.connected());
    EXPECT_TRUE(inbox.wait_for(sent, 2s));
}

TEST_F(LoopbackTest, ScenarioSingleCoapSensor) {
    sim::Scenario s;
    s.duration_s = 10;
    sim::SensorSpec sensor;
    sensor.sensor_id = "s1";
    sensor.period_ms = 100;
    sensor.value_model = {sim::ValueKind::sine, 2, 20, 5, 0, 1};
    s.sensors.push_back(sensor);
    sim::SubscriberSpec sub;
    sub.name = "viewer";
    sub.filter_or_topic = "obs/sensors/s1/#";
    s.subscribers.push_back(sub);
    s.expected.min_messages_per_subscriber = 100;
    s.expected.max_drops = 0;

    const auto r = sim::run_scenario(s, endpoints());
    EXPECT_TRUE(r.passed()) << ::testing::PrintToString(r.failures);
    ASSERT_EQ(r.sensors.size(), 1u);
    ASSERT_EQ(r.subscribers.size(), 1u);
    EXPECT_EQ(r.sensors[0].published, 100u);
    EXPECT_EQ(r.subscribers[0].received, r.sensors[0].published);
    EXPECT_EQ(r.subscribers[0].shape_valid, r.subscribers[0].received);
    EXPECT_EQ(r.subscribers[0].out_of_order, 0u);
}

TEST_F(LoopbackTest, ScenarioWithoutSensors) {
    sim::Scenario s;
    s.duration_s = 0;
    sim::SubscriberSpec sub;
    sub.filter_or_topic = "obs/#";
    sub.name = "idle";
    s.subscribers.push_back(sub);
    const auto r = sim::run_scenario(s, endpoints());
    EXPECT_TRUE(r.passed()) << ::testing::PrintToString(r.failures);
    EXPECT_EQ(r.subscribers.at(0).received, 0u);
    EXPECT_EQ(r.gateway.ingested, 0u);
}

TEST_F(LoopbackTest, ScenarioInvalidTokenOnPrivateTopic) {
    sim::Scenario s;
    s.duration_s = 1;
    sim::SensorSpec sensor;
    sensor.sensor_id = "p1";
    sensor.protocol = Protocol::mqtt;
    sensor.period_ms = 100;
    s.sensors.push_back(sensor);
    sim::SubscriberSpec sub;
    sub.name = "intruder";
    sub.filter_or_topic = "obs/sensors/p1/#";
    sub.token.literal = "not-a-token";
    s.subscribers.push_back(sub);
    const auto r = sim::run_scenario(s, endpoints());
    const auto& got = r.subscribers.at(0);
    EXPECT_FALSE(got.subscribed);
    EXPECT_EQ(got.received, 0u);
    EXPECT_GE(r.gateway.denied, 1u);
}

}  // namespace
}  // namespace sgs
