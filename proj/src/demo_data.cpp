#include <array>
#include <fstream>

#include <fmt/format.h>

#include "infdecomp/error.hpp"
#include "infdecomp/pipeline.hpp"
#include "infdecomp/rng.hpp"

namespace infdecomp {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

template <std::size_t N>
const char* pick(Rng& rng, const std::array<const char*, N>& pool) {
  return pool[rng.uniform_index(N)];
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

// Two comment themes; mixed comments join one clause from each with "and".
constexpr std::array<const char*, 8> kSafety = {
    "the label must warn about liver damage",
    "the agency should require a black box warning for heart risk",
    "patients deserve clear notice of seizure side effects",
    "post market studies should track kidney injury",
    "the warning should mention dangerous drug interactions",
    "doctors need better data on long term toxicity",
    "trials must report every serious adverse event",
    "the insert should explain the overdose risk plainly",
};
constexpr std::array<const char*, 8> kCost = {
    "the price of generic insulin keeps rising",
    "rural pharmacies cannot afford to stock the medicine",
    "insurers refuse to cover the newer formulation",
    "copays for seniors have doubled this year",
    "manufacturers raise list prices without any justification",
    "families ration pills because refills cost too much",
    "the rule would add paperwork costs for small clinics",
    "patients travel abroad to buy cheaper prescriptions",
};
constexpr std::array<const char*, 6> kOpeners = {
    "As a nurse I believe", "In my experience", "Frankly", "I strongly feel", "As a caregiver I think", "Honestly",
};

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

void write_comments(const fs::path& path, Rng& rng) {
  auto out = open_out(path);
  for (int i = 0; i < 150; ++i) {
    const bool safety_first = rng.uniform01() < 0.5;
    const std::string a = safety_first ? pick(rng, kSafety) : pick(rng, kCost);
    const std::string b = safety_first ? pick(rng, kCost) : pick(rng, kSafety);
    std::string text = fmt::format("{} {} and {}.", pick(rng, kOpeners), a, b);
    if (rng.uniform01() < 0.4) text += fmt::format(" {}.", capitalize(safety_first ? pick(rng, kSafety) : pick(rng, kCost)));
    out << json{{"id", fmt::format("c{:03d}", i)}, {"text", text}, {"source", "fda_comment"}}.dump() << '\n';
  }
}

constexpr std::array<const char*, 10> kSubjects = {"The committee", "The mayor", "A local farmer", "The new library",
                                                   "Our coach", "The city council", "A young pianist", "The museum",
                                                   "The airline", "A research team"};
constexpr std::array<const char*, 10> kEvents = {
    "approved the budget", "opened a community garden", "won the regional award", "delayed the railway project",
    "published a study on river pollution", "cancelled the summer festival", "hired twenty teachers",
    "expanded the bus network", "released a new album", "closed the old factory"};
constexpr std::array<const char*, 6> kReasons = {"because funding arrived early", "because residents complained",
                                                 "because the weather turned", "because costs kept rising",
                                                 "because volunteers stepped up", "because the vote was close"};

void write_sts(const fs::path& tsv, const fs::path& jsonl, Rng& rng) {
  auto out = open_out(tsv);
  out << "text_a\ttext_b\tscore\n";
  for (int i = 0; i < 40; ++i) {
    const std::size_t s = rng.uniform_index(kSubjects.size());
    const std::size_t e = rng.uniform_index(kEvents.size());
    const std::size_t r = rng.uniform_index(kReasons.size());
    const double u = rng.uniform01();
    std::string a = fmt::format("{} {} {}.", kSubjects[s], kEvents[e], kReasons[r]);
    std::string b;
    double score;
    if (u < 0.3) {
      b = fmt::format("{} {}.", kSubjects[s], kEvents[e]);
      score = 4.0 + rng.uniform(0.0, 1.0);
    } else if (u < 0.6) {
      b = fmt::format("{} {} {}.", kSubjects[s], kEvents[(e + 1) % kEvents.size()], kReasons[r]);
      score = 2.0 + rng.uniform(0.0, 1.0);
    } else {
      b = fmt::format("{} {} {}.", kSubjects[(s + 3) % kSubjects.size()], kEvents[(e + 5) % kEvents.size()],
                      kReasons[(r + 2) % kReasons.size()]);
      score = rng.uniform(0.0, 1.0);
    }
    out << fmt::format("{}\t{}\t{:.2f}\n", a, b, score);
  }

  auto para = open_out(jsonl);
  for (int i = 0; i < 40; ++i) {
    const std::size_t s = rng.uniform_index(kSubjects.size());
    const std::size_t e = rng.uniform_index(kEvents.size());
    const std::size_t r = rng.uniform_index(kReasons.size());
    const int label = rng.uniform01() < 0.5 ? 1 : 0;
    const std::string a = fmt::format("{} {} {}.", kSubjects[s], kEvents[e], kReasons[r]);
    const std::string b = label ? fmt::format("{} {} and it happened {}.", kSubjects[s], kEvents[e], kReasons[r])
                                : fmt::format("{} {} {}.", kSubjects[s], kEvents[(e + 4) % kEvents.size()], kReasons[r]);
    para << json{{"text_a", a}, {"text_b", b}, {"label", label}}.dump() << '\n';
  }
}

// Four tweet topics, each with partisan framings.
struct TopicPhrases {
  std::array<const char*, 4> neutral;
  std::array<const char*, 3> left;
  std::array<const char*, 3> right;
};

const std::array<TopicPhrases, 4>& tweet_topics() {
  static const std::array<TopicPhrases, 4> kTopics = {{
      {{"hospitals in our district need more nurses", "medicare enrollment opens next week",
        "prescription costs hurt working families", "rural clinics are closing"},
       {"we must expand medicaid coverage", "insurers should never deny preexisting conditions",
        "public option plans lower premiums"},
       {"patients deserve choice over government plans", "health savings accounts empower families",
        "mandates drive premiums higher"}},
      {{"farmers face drought across the valley", "wildfire smoke covered the county", "the river flooded again",
        "energy bills climbed this winter"},
       {"clean energy jobs are growing fast", "climate action cannot wait", "solar credits help homeowners"},
       {"pipelines keep energy affordable", "coal miners need our support", "drilling permits create jobs"}},
      {{"the border crossing saw long lines", "asylum hearings are backlogged", "visa processing delays hurt employers",
        "immigration courts need judges"},
       {"dreamers deserve a path to citizenship", "families should never be separated", "refugees strengthen our towns"},
       {"we must secure the border wall", "sanctuary policies endanger communities", "enforcement keeps neighborhoods safe"}},
      {{"small businesses reopened downtown", "the jobs report came out today", "inflation squeezes grocery budgets",
        "the budget vote is tomorrow"},
       {"the minimum wage should rise", "billionaires must pay their fair share", "unions built the middle class"},
       {"tax cuts let families keep more", "regulations strangle small business", "spending must be cut now"}},
  }};
  return kTopics;
}

}  // namespace

void write_demo_data(const fs::path& dir, const fs::path& bundled_data_dir) {
  fs::create_directories(dir);
  Rng rng(20240601);

  for (const char* name : {"templates.json", "exemplars_fda.json", "exemplars_legislative.json"}) {
    const fs::path src = bundled_data_dir / name;
    if (!fs::exists(src)) throw Error("bundled data file not found: " + src.string());
    fs::copy_file(src, dir / name, fs::copy_options::overwrite_existing);
  }

  write_comments(dir / "comments.jsonl", rng);
  write_sts(dir / "sts_similarity.tsv", dir / "sts_paraphrase.jsonl", rng);

  constexpr int kLegislators = 24;
  constexpr int kRollCalls = 80;
  constexpr std::array<const char*, 6> kStates = {"CA", "TX", "NY", "OH", "GA", "WA"};
  std::vector<double> ideology(kLegislators);
  {
    auto out = open_out(dir / "legislators.csv");
    out << "legislator_id,party,state\n";
    for (int i = 0; i < kLegislators; ++i) {
      const bool dem = i % 2 == 0;
      ideology[i] = (dem ? -1.0 : 1.0) + 0.5 * rng.normal();
      out << fmt::format("L{:02d},{},{}\n", i, dem ? "D" : "R", kStates[static_cast<std::size_t>(i) % kStates.size()]);
    }
  }
  {
    auto out = open_out(dir / "votes.csv");
    out << "legislator_id,vote_id,position\n";
    for (int v = 0; v < kRollCalls; ++v) {
      const double cut = rng.normal();
      for (int i = 0; i < kLegislators; ++i) {
        const double u = rng.uniform01();
        const char* pos = u < 0.05 ? "other" : (ideology[i] + 0.6 * rng.normal() > cut ? "yea" : "nay");
        out << fmt::format("L{:02d},RC{:03d},{}\n", i, v, pos);
      }
    }
  }
  {
    auto out = open_out(dir / "tweets.jsonl");
    const auto& topics = tweet_topics();
    for (int i = 0; i < kLegislators; ++i) {
      const bool dem = i % 2 == 0;
      for (int n = 0; n < 8; ++n) {
        const auto& t = topics[static_cast<std::size_t>((n + i) % 4)];
        // Mostly party framing, sometimes the other side's, so similarity varies within parties.
        const bool own = rng.uniform01() < 0.8;
        const auto& frames = (dem == own) ? t.left : t.right;
        std::string text = fmt::format("{} and {}", capitalize(pick(rng, t.neutral)), pick(rng, frames));
        if (rng.uniform01() < 0.5) text += fmt::format(" because {}", pick(rng, t.neutral));
        text += ".";
        out << json{{"id", fmt::format("t{:02d}_{}", i, n)},
                    {"text", text},
                    {"source", "tweet"},
                    {"meta", {{"legislator", fmt::format("L{:02d}", i)}}}}
                   .dump()
            << '\n';
      }
    }
  }

  auto cfg = open_out(dir / "config.ini");
  cfg << "[run]\n"
         "seed = 7\n"
         "out_dir = out\n"
         "cache_dir = cache\n"
         "\n"
         "[generation]\n"
         "provider = mock\n"
         "\n"
         "[embedding]\n"
         "provider = mock\n"
         "dim = 256\n"
         "\n"
         "[decompose]\n"
         "corpus = comments.jsonl\n"
         "templates = templates.json\n"
         "template = fda_propositions\n"
         "exemplars = exemplars_fda.json\n"
         "exemplars_per_prompt = 6\n"
         "\n"
         "[cluster]\n"
         "k_grid = 15, 25, 50\n"
         "packets_per_cluster = 2\n"
         "\n"
         "[sts]\n"
         "datasets = demo-sim:similarity:sts_similarity.tsv, demo-para:paraphrase:sts_paraphrase.jsonl\n"
         "template = sts_paraphrase\n"
         "\n"
         "[topics]\n"
         "tweets = tweets.jsonl\n"
         "num_topics = 4\n"
         "iterations = 200\n"
         "min_count = 2\n"
         "threshold = 0.5\n"
         "tweets_per_topic = 5\n"
         "\n"
         "[covote]\n"
         "votes = votes.csv\n"
         "legislators = legislators.csv\n"
         "percentile = 10\n"
         "template = legislative_claims\n"
         "exemplars = exemplars_legislative.json\n";
}

}  // namespace infdecomp
