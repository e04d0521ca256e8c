#include "suite.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>

// Prints one line per criterion. Exit status is nonzero when a criterion
// outside --known-red fails; a known-red criterion that passes is reported
// but does not fail the run.
int main(int argc, char** argv)
{
    CLI::App app{"acceptance criteria"};
    std::vector<int> only, known_red;
    app.add_option("--only", only, "criteria to run");
    app.add_option("--known-red", known_red, "criteria expected to fail");
    CLI11_PARSE(app, argc, argv);

    ncsol::acceptance::SuiteOptions opt;
    opt.only = only;
    opt.on_result = [](const auto& r) {
        std::printf("%s\n", ncsol::acceptance::format_line(r).c_str());
        std::fflush(stdout);
    };
    const auto results = ncsol::acceptance::run_suite(opt);

    int unexpected = 0, passed = 0;
    for (const auto& r : results) {
        const bool red = std::find(known_red.begin(), known_red.end(), r.id) != known_red.end();
        passed += r.pass;
        if (!r.pass && !red)
            ++unexpected;
        if (r.pass && red)
            std::printf("note: criterion %d was listed as known red but passed\n", r.id);
    }
    std::printf("%d/%zu criteria pass, %d unexpected failures\n", passed, results.size(), unexpected);
    return unexpected == 0 ? 0 : 1;
}
