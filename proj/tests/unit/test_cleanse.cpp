#include <doctest.h>

#include "helpers.hpp"
#include "rca/cleanse.hpp"

using namespace rca;

TEST_CASE("is_stack_frame_line") {
    CHECK(is_stack_frame_line("at com.foo.Bar.run(Bar.java:42)"));
    CHECK_FALSE(is_stack_frame_line("Customers cannot sign in to the portal"));
    CHECK(is_stack_frame_line("ABCStagingWriter.execute() failed"));
    CHECK(is_stack_frame_line("   at System.Net.Http.HttpClient.SendAsync(HttpRequestMessage request)"));
    CHECK(is_stack_frame_line("com.example.Service$Inner.lambda$run$0(Service.java:77) ~[app.jar:?]"));
    CHECK_FALSE(is_stack_frame_line("Call foo() and bar() manually to verify."));
    CHECK_FALSE(is_stack_frame_line("Version 2.14.1 was rolled back."));
    CHECK_FALSE(is_stack_frame_line("ABCStagingWriter.execute() failed after four retries overnight"));
    CHECK_FALSE(is_stack_frame_line(""));
    CHECK_FALSE(is_stack_frame_line("at com.foo.Bar.run(Bar.java:42"));  // unbalanced
}

TEST_CASE("strip_stack_traces") {
    const auto r = strip_stack_traces("first line\nat com.foo.Bar.run(Bar.java:42)\nlast line");
    CHECK(r.text == "first line\nlast line");
    CHECK(r.removed == 1);

    const std::string prose = "Nothing to see.\nStill nothing.";
    CHECK(strip_stack_traces(prose).text == prose);
    CHECK(strip_stack_traces(prose).removed == 0);

    std::string frames;
    for (int i = 0; i < 12; ++i) frames += "at com.foo.Bar.m" + std::to_string(i) + "(Bar.java:" + std::to_string(i) + ")\n";
    const auto all = strip_stack_traces(frames);
    CHECK(all.removed == 12);
    CHECK(trim(all.text).empty());
}

TEST_CASE("strip_embedded_images") {
    const auto tag = strip_embedded_images(R"(See <img src="data:image/png;base64,AAAA"> above.)");
    CHECK(tag.removed == 1);
    CHECK(tag.text.find("base64") == std::string::npos);
    CHECK(tag.text.find("See ") == 0);
    CHECK(tag.text.find("above.") != std::string::npos);

    CHECK(strip_embedded_images("plain prose only").text == "plain prose only");
    CHECK(strip_embedded_images("plain prose only").removed == 0);

    const std::string blob(600, 'Q');
    const auto raw = strip_embedded_images("dump " + blob + " end");
    CHECK(raw.removed == 1);
    CHECK(raw.text.find(blob.substr(0, 40)) == std::string::npos);

    const std::string short_blob(kBase64BlobMinLength - 1, 'Q');
    CHECK(strip_embedded_images("dump " + short_blob).removed == 0);
    CHECK(strip_embedded_images("dump " + std::string(kBase64BlobMinLength, 'Q')).removed == 1);
}

TEST_CASE("clean_incident") {
    auto inc = testing::incident(
        "1", "t",
        "Portal down.\nat com.foo.Bar.run(Bar.java:42)\nScreenshot <img src=\"data:image/png;base64,iVBOR\"> attached.",
        "Expired certificate.");
    CleanReport report;
    const auto cleaned = clean_incident(inc, &report);
    REQUIRE(cleaned.summary_clean);
    CHECK(cleaned.summary_clean->find("Bar.java") == std::string::npos);
    CHECK(cleaned.summary_clean->find("iVBOR") == std::string::npos);
    CHECK(report.stack_lines_removed == 1);
    CHECK(report.images_removed == 1);
    CHECK(report.chars_after < report.chars_before);
    CHECK(cleaned.summary_raw == inc.summary_raw);

    const auto plain = testing::incident("2", "t", "Already clean.", "Nothing odd.");
    const auto same = clean_incident(plain);
    CHECK(*same.summary_clean == plain.summary_raw);
    CHECK(*same.root_cause_clean == plain.root_cause_raw);
}

TEST_CASE("clean_text is idempotent") {
    const std::string nested = "a\nat x.Y.z(<img src=\"data:image/png;base64,AA\">)\nb " + std::string(700, 'k');
    CleanReport r1, r2;
    const auto once = clean_text(nested, r1);
    const auto twice = clean_text(once, r2);
    CHECK(once == twice);
    CHECK(r2.stack_lines_removed == 0);
    CHECK(r2.images_removed == 0);
}
