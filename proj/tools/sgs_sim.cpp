// sgs-sim: scenario-driven virtual sensors and validating subscribers.

#include <fstream>
#include <iostream>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "sgs/error.hpp"
#include "sgs/sim.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Simulation harness for the semantic gateway"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run a scenario against a gateway");
    std::string scenario_path;
    std::string coap = "127.0.0.1:5683";
    std::string mqtt = "127.0.0.1:1883";
    std::string http = "127.0.0.1:8080";
    std::string report_path;
    run->add_option("--scenario", scenario_path, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--coap", coap, "Gateway CoAP address host:port");
    run->add_option("--mqtt", mqtt, "Gateway MQTT address host:port");
    run->add_option("--http", http, "Gateway REST address host:port");
    run->add_option("--report", report_path, "Write the JSONL report here");

    CLI11_PARSE(app, argc, argv);

    spdlog::set_level(spdlog::level::warn);
    try {
        const auto scenario = sgs::sim::load_scenario(scenario_path);
        const sgs::sim::Endpoints endpoints{sgs::net::Address::parse(coap), sgs::net::Address::parse(mqtt),
                                            sgs::net::Address::parse(http)};
        const auto report = sgs::sim::run_scenario(scenario, endpoints);
        if (!report_path.empty()) {
            std::ofstream out(report_path);
            if (!out) {
                std::cerr << "sgs-sim: cannot write report to " << report_path << '\n';
                return 2;
            }
            sgs::sim::write_jsonl(report, out);
        }
        sgs::sim::write_summary(report, std::cout);
        return report.passed() ? 0 : 1;
    } catch (const sgs::Error& e) {
        std::cerr << "sgs-sim: " << e.what() << '\n';
        return 2;
    }
}
