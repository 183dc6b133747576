// Command-line front end: check / run / nullspace / riemann / dump a scenario file.
//
// Exit codes: 0 all expectations met, 1 expectation mismatch, 2 input or stage error.

#include "ucp/parallel.hpp"
#include "ucp/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;

namespace {

struct Args {
    std::string scenario;
    std::string out;
    std::string format = "json";
    int jobs = 1;
    unsigned seed = 0;
    std::vector<double> param;
};

std::vector<ucp::Task> intersect(const ucp::Scenario& sc, std::initializer_list<ucp::Task> allowed,
                                 std::initializer_list<ucp::Task> always)
{
    std::vector<ucp::Task> out(always);
    for (ucp::Task t : allowed)
        if (sc.has_task(t))
            out.push_back(t);
    return out;
}

int execute(const std::string& command, const Args& a)
{
    using ucp::Task;
    const ucp::Scenario sc = ucp::load_scenario(a.scenario);
    ucp::set_worker_count(a.jobs);

    ucp::RunOptions opt;
    opt.seed = a.seed;
    opt.collect_grids = a.format == "csv";
    if (command == "check") {
        opt.only = intersect(sc, {Task::PointData}, {Task::Conditions, Task::Reduce});
        if (sc.family.empty())
            opt.only->erase(std::remove(opt.only->begin(), opt.only->end(), Task::PointData), opt.only->end());
    } else if (command == "nullspace") {
        opt.only = intersect(sc, {Task::PointData}, {Task::Nullspace});
    } else if (command == "riemann") {
        opt.only = std::vector<Task>{Task::Characteristics, Task::Riemann};
        opt.collect_grids = true;
    } else if (command == "dump") {
        opt.only = intersect(sc, {Task::Riemann, Task::Nullspace}, {Task::Characteristics});
        opt.collect_grids = true;
    }
    if (a.param.size() == 2)
        opt.riemann_param = std::make_pair(a.param[0], a.param[1]);
    if (opt.collect_grids && a.out.empty())
        throw ucp::ScenarioError("--out", "CSV grids need an output directory");

    const ucp::ScenarioReport report = ucp::run(sc, opt);
    const std::string text = report.json.dump(2) + "\n";
    if (a.out.empty()) {
        std::cout << text;
    } else {
        fs::create_directories(a.out);
        std::ofstream(fs::path(a.out) / (sc.name + ".report.json")) << text;
        for (const auto& g : report.grids) {
            std::ofstream csv(fs::path(a.out) / (sc.name + "." + g.name + ".csv"));
            ucp::write_csv(csv, g);
        }
    }
    if (!report.passed()) {
        for (const auto& rec : report.json["expectations"])
            if (rec["status"] == "fail")
                std::cerr << "expectation '" << rec["key"].get<std::string>() << "' failed: expected "
                          << rec["expected"].dump() << ", got " << rec["actual"].dump() << "\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Unique continuation toolkit for the reduced elasticity pair"};
    app.require_subcommand(1);
    Args args;

    const std::pair<const char*, const char*> commands[] = {
        {"check", "Audit the tensor hypotheses and the reduced pair"},
        {"run", "Run every task declared in the scenario"},
        {"nullspace", "Estimate the solution-space dimension of the pair"},
        {"riemann", "Solve for the Riemann function and write it as CSV"},
        {"dump", "Write coefficient, Riemann and null-space grids as CSV"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--scenario", args.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", args.out, "Output directory (report and CSV grids)");
        sub->add_option("--format", args.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
        sub->add_option("--jobs", args.jobs, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", args.seed, "Seed of the randomized start block");
        if (std::string(name) == "riemann")
            sub->add_option("--param", args.param, "Parameter node xi eta (default 0 0)")->expected(2);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return execute(command, args);
    } catch (const ucp::ScenarioError& e) {
        std::cerr << "error: scenario key " << e.what() << "\n";
    } catch (const ucp::StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return 2;
}
