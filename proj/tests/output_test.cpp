#include "delnet/csv.hpp"
#include "delnet/svg.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <string>

namespace {

delnet::Trace small_trace() {
  delnet::Trace tr;
  tr.times = {0.0, 0.5, 1.0};
  tr.series["err2"] = {2.0, 1.0, 0.25};
  tr.series["energy"] = {0.0, 3.0, 6.0};
  return tr;
}

TEST(OutputCsv, GoldenSmallTraceSerializesExactly) {
  std::vector<delnet::SeedRun> runs(1);
  runs[0].seed = 7;
  runs[0].trace = small_trace();
  const std::string expected =
      "kind,seed,time,metric,value\n"
      "gossip,7,0,energy,0\n"
      "gossip,7,0.5,energy,3\n"
      "gossip,7,1,energy,6\n"
      "gossip,7,0,err2,2\n"
      "gossip,7,0.5,err2,1\n"
      "gossip,7,1,err2,0.25\n";
  EXPECT_EQ(delnet::trace_csv_text("gossip", runs), expected);
}

TEST(OutputCsv, RewritingTheSameRunsIsByteIdentical) {
  std::vector<delnet::SeedRun> runs(2);
  runs[0].seed = 0;
  runs[0].trace = small_trace();
  runs[1].seed = 1;
  runs[1].trace = small_trace();
  runs[1].trace.series["err2"][2] = 0.125;
  const std::string once = delnet::trace_csv_text("gossip", runs);
  const std::string twice = delnet::trace_csv_text("gossip", runs);
  EXPECT_EQ(once, twice);
}

TEST(OutputCsv, FullPrecisionSurvivesARoundTrip) {
  std::vector<delnet::SeedRun> runs(1);
  runs[0].seed = 3;
  runs[0].trace.times = {0.0, 1.0 / 3.0};
  runs[0].trace.series["err2"] = {1.2345678901234567e-8, 0.1 + 0.2};
  std::stringstream io;
  delnet::write_trace_csv(io, "gossip", runs);
  const auto rows = delnet::read_trace_csv(io);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].kind, "gossip");
  EXPECT_EQ(rows[0].seed, 3u);
  EXPECT_EQ(rows[0].metric, "err2");
  EXPECT_EQ(rows[0].value, 1.2345678901234567e-8);
  EXPECT_EQ(rows[1].time, 1.0 / 3.0);
  EXPECT_EQ(rows[1].value, 0.1 + 0.2);
}

TEST(OutputCsv, MismatchedSeriesLengthIsABug) {
  std::vector<delnet::SeedRun> runs(1);
  runs[0].trace.times = {0.0, 1.0};
  runs[0].trace.series["err2"] = {1.0};
  std::ostringstream os;
  EXPECT_THROW(delnet::write_trace_csv(os, "gossip", runs), std::logic_error);
}

TEST(OutputCsv, MalformedInputIsRejectedWithALineNumber) {
  {
    std::istringstream in("time,metric,value\n");
    EXPECT_THROW(delnet::read_trace_csv(in), std::invalid_argument);
  }
  {
    std::istringstream in("kind,seed,time,metric,value\ngossip,0,0,err2\n");
    EXPECT_THROW(delnet::read_trace_csv(in), std::invalid_argument);
  }
  {
    std::istringstream in("kind,seed,time,metric,value\ngossip,x,0,err2,1\n");
    try {
      delnet::read_trace_csv(in);
      FAIL() << "bad seed accepted";
    } catch (const std::invalid_argument& err) {
      EXPECT_NE(std::string(err.what()).find("line 2"), std::string::npos);
    }
  }
  {
    std::istringstream in("kind,seed,time,metric,value\ngossip,0,0,err2,1e\n");
    EXPECT_THROW(delnet::read_trace_csv(in), std::invalid_argument);
  }
  {
    std::istringstream in("kind,seed,time,metric,value\n\ngossip,0,0,err2,1\n");
    EXPECT_EQ(delnet::read_trace_csv(in).size(), 1u);  // blank lines skipped
  }
}

delnet::PlotPanel demo_panel() {
  delnet::PlotPanel panel;
  panel.title = "error";
  panel.x_label = "time";
  panel.y_label = "err2";
  delnet::PlotSeries mean;
  mean.label = "mean";
  mean.x = {0.0, 1.0, 2.0, 3.0};
  mean.y = {1.0, 0.1, 0.01, 0.001};
  mean.band = {0.1, 0.01, 0.001, 0.0001};
  delnet::PlotSeries bound;
  bound.label = "bound";
  bound.x = mean.x;
  bound.y = {4.0, 0.4, 0.04, 0.004};
  bound.dashed = true;
  panel.series = {mean, bound};
  return panel;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

TEST(OutputSvg, PlotsContainPolylinesABandAndALegend) {
  const std::string svg = delnet::svg_text({demo_panel()});
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_EQ(count(svg, "<polyline"), 2u);
  EXPECT_EQ(count(svg, "<polygon"), 1u);  // one series has a band
  EXPECT_EQ(count(svg, "class=\"legend\""), 2u);
  EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);
  EXPECT_NE(svg.find(">mean</text>"), std::string::npos);
  EXPECT_NE(svg.find(">bound</text>"), std::string::npos);
}

TEST(OutputSvg, TagsBalanceAndLabelsAreEscaped) {
  delnet::PlotPanel panel = demo_panel();
  panel.title = "a < b & c";
  const std::string svg = delnet::svg_text({panel, demo_panel()});
  EXPECT_EQ(count(svg, "<svg"), 1u);
  EXPECT_EQ(count(svg, "</svg>"), 1u);
  EXPECT_EQ(count(svg, "<text"), count(svg, "</text>"));
  EXPECT_NE(svg.find("a &lt; b &amp; c"), std::string::npos);
  EXPECT_EQ(svg.find("a < b"), std::string::npos);
  // Two panels, each with two lines.
  EXPECT_EQ(count(svg, "<polyline"), 4u);
}

TEST(OutputSvg, LogScaleOrdersDecadesTopToBottom) {
  // With y spanning 1e-3..1 the decade ticks must appear and the smaller
  // value must map to a larger pixel y (SVG y grows downward).
  const std::string svg = delnet::svg_text({demo_panel()});
  EXPECT_NE(svg.find(">0.01</text>"), std::string::npos);
  EXPECT_NE(svg.find(">1</text>"), std::string::npos);

  delnet::PlotSeries s;
  s.label = "s";
  s.x = {0.0, 1.0};
  s.y = {1.0, 0.001};
  delnet::PlotPanel panel;
  panel.title = "t";
  panel.series = {s};
  const std::string one = delnet::svg_text({panel});
  const std::size_t pts = one.find("points=\"");
  ASSERT_NE(pts, std::string::npos);
  const std::size_t comma1 = one.find(',', pts);
  const double y_first = std::strtod(one.c_str() + comma1 + 1, nullptr);
  const std::size_t space = one.find(' ', comma1);
  const std::size_t comma2 = one.find(',', space);
  const double y_second = std::strtod(one.c_str() + comma2 + 1, nullptr);
  EXPECT_LT(y_first, y_second);
}

TEST(OutputSvg, ZeroAndNegativeValuesAreFlooredOnTheLogAxis) {
  delnet::PlotSeries s;
  s.label = "s";
  s.x = {0.0, 1.0, 2.0};
  s.y = {1.0, 0.0, 1e-3};
  delnet::PlotPanel panel;
  panel.title = "t";
  panel.series = {s};
  const std::string svg = delnet::svg_text({panel});
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
  EXPECT_EQ(svg.find("inf"), std::string::npos);
}

}  // namespace
