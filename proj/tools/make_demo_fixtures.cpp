// Regenerates the shipped demo fixture set under the given directory.
#include <iostream>

#include <CLI11.hpp>

#include "proxyaudit/demo.hpp"

namespace demo = proxyaudit::demo;

int main(int argc, char** argv) {
    CLI::App app{"write the demo fixtures"};
    std::string dir = "demo";
    app.add_option("dir", dir, "destination directory");
    CLI11_PARSE(app, argc, argv);

    std::filesystem::path root(dir);
    std::filesystem::create_directories(root);
    auto interests = demo::demo_interests();
    demo::save_planted_interests(interests, root / "interests.csv");

    demo::CorpusConfig cc;
    cc.first_monday = *proxyaudit::adlib::parse_date("2026-01-05");
    auto corpus = demo::generate_ad_corpus(interests, cc);
    std::filesystem::remove_all(root / "adlib");
    demo::write_replay_dir(corpus, root / "adlib");
    demo::write_affiliations(corpus, root / "affiliations.csv");

    auto pages = demo::generate_pages(interests);
    demo::write_pages(pages, root / "domain_bias.csv", root / "interest_pages.jsonl");

    std::cout << interests.size() << " interests, " << corpus.advertisers.size() << " advertisers, "
              << corpus.windows << " windows, " << corpus.requests << " report requests ("
              << corpus.missing << " missing) over " << corpus.dates.size() << " days\n";
    return 0;
}
