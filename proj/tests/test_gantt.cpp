#include <gtest/gtest.h>

#include <regex>

#include "mrsched/gantt.hpp"

using namespace mrsched;

namespace {

Schedule two_lanes() {
    Schedule s;
    s.entries = {{"a", "R1", 0.0, 2.0, {}}, {"b", "R1", 2.0, 6.0, {}}, {"c", "R2", 1.0, 4.0, {}}};
    s.makespan = 6.0;
    s.per_robot_completion = {{"R1", 6.0}, {"R2", 4.0}};
    return s;
}

std::map<std::string, double> widths(const std::string& svg) {
    std::map<std::string, double> out;
    std::regex rect(R"re(data-task="([^"]+)" x="[^"]+" y="[^"]+" width="([^"]+)")re");
    for (std::sregex_iterator it(svg.begin(), svg.end(), rect), end; it != end; ++it)
        out[(*it)[1]] = std::stod((*it)[2]);
    return out;
}

} // namespace

TEST(Gantt, SvgLanesAndProportionalWidths) {
    const auto svg = gantt::render_svg(two_lanes());
    EXPECT_NE(svg.find("data-robot=\"R1\""), std::string::npos);
    EXPECT_NE(svg.find("data-robot=\"R2\""), std::string::npos);
    auto w = widths(svg);
    ASSERT_EQ(w.size(), 3u);
    EXPECT_NEAR(w["b"] / w["a"], 2.0, 1e-3);
    EXPECT_NEAR(w["c"] / w["a"], 1.5, 1e-3);
    EXPECT_NE(svg.find("class=\"axis\""), std::string::npos);
}

TEST(Gantt, EmptyScheduleHasAxisOnly) {
    const auto svg = gantt::render_svg(Schedule{});
    EXPECT_EQ(svg.find("class=\"lane\""), std::string::npos);
    EXPECT_EQ(svg.find("class=\"task\""), std::string::npos);
    EXPECT_NE(svg.find("class=\"axis\""), std::string::npos);
    EXPECT_EQ(gantt::render_ascii(Schedule{}).find('\n'), gantt::render_ascii(Schedule{}).size() - 1);
}

TEST(Gantt, AsciiRowsPerRobot) {
    const auto txt = gantt::render_ascii(two_lanes(), 60);
    std::vector<std::string> lines;
    std::string cur;
    for (char c : txt) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[1].rfind("R1", 0), 0u);
    // a covers columns [0,20), b [20,60) at 10 columns per second.
    const auto bar = lines[1].substr(lines[1].find('|') + 1, 60);
    EXPECT_EQ(bar.substr(0, 3), "[a=");
    EXPECT_EQ(bar[19], ']');
    EXPECT_EQ(bar.substr(20, 2), "[b");
    EXPECT_EQ(bar[59], ']');
    EXPECT_EQ(lines[2].substr(lines[2].find('|') + 1 + 10, 2), "[c");
}

TEST(Gantt, Deterministic) {
    EXPECT_EQ(gantt::render_svg(two_lanes()), gantt::render_svg(two_lanes()));
    EXPECT_EQ(gantt::render_ascii(two_lanes()), gantt::render_ascii(two_lanes()));
}
