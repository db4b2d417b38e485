#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crlm/pipeline/prompts.hpp"
#include "crlm/volgrid/grid.hpp"

namespace crlm::pipeline {

enum class Provenance { manual, pseudo };

inline const char* provenance_name(Provenance p) { return p == Provenance::manual ? "manual" : "pseudo"; }

struct StructurePlan {
  Label structure = Label::liver;
  Provenance provenance = Provenance::manual;
  std::optional<SeedPrompt> prompt;  // required for pseudo
};

struct CasePlan {
  std::string case_id;
  std::vector<StructurePlan> structures;
};

struct LabelCompletionPlan {
  std::vector<CasePlan> cases;

  // Every (case, structure) appears once; pseudo targets carry a prompt.
  void validate() const {
    std::set<std::string> ids;
    for (const auto& c : cases) {
      if (!ids.insert(c.case_id).second) throw InvalidArgument("completion plan: duplicate case '" + c.case_id + "'");
      std::set<Label> seen;
      for (const auto& s : c.structures) {
        if (s.structure == Label::background) throw InvalidArgument("completion plan: background is not a structure");
        if (!seen.insert(s.structure).second)
          throw InvalidArgument("completion plan: case '" + c.case_id + "' lists " + label_name(s.structure) + " twice");
        if (s.provenance == Provenance::pseudo && !s.prompt)
          throw InvalidArgument("completion plan: pseudo " + std::string(label_name(s.structure)) + " in case '" +
                                c.case_id + "' has no seed prompt");
      }
    }
  }
};

struct CompletionCase {
  std::string case_id;
  Volume3D image;
  std::map<Label, Mask3D> manual;  // binary masks, nonzero = structure
};

struct CompletedCase {
  std::string case_id;
  Mask3D labels;
  std::map<Label, Provenance> provenance;
};

struct CompletionFailure {
  std::string case_id;
  Label structure = Label::liver;
  std::string message;
};

struct CompletionResult {
  std::vector<CompletedCase> completed;
  std::vector<CompletionFailure> failures;
};

using PseudoLabeler = std::function<Mask3D(const Volume3D&, const SeedPrompt&)>;

// Higher wins on a voxel: any manual structure beats any pseudo one; within
// a provenance tumor > liver > spleen.
inline int merge_rank(Label l, Provenance p) {
  const int base = p == Provenance::manual ? 10 : 0;
  switch (l) {
    case Label::tumor: return base + 3;
    case Label::liver: return base + 2;
    case Label::spleen: return base + 1;
    default: return 0;
  }
}

inline Mask3D merge_structures(const Geometry& g, const std::vector<std::tuple<Label, Provenance, const Mask3D*>>& parts) {
  Mask3D out(g);
  std::vector<int> rank(out.size(), 0);
  for (const auto& [label, prov, mask] : parts) {
    if (mask->geometry().dims != g.dims) throw InvalidArgument("completion: mask geometry mismatch");
    const int r = merge_rank(label, prov);
    for (std::size_t i = 0; i < out.size(); ++i)
      if ((*mask)[i] != 0 && r > rank[i]) {
        rank[i] = r;
        out[i] = static_cast<std::uint8_t>(label);
      }
  }
  return out;
}

// Runs the pseudo-labeler for every pseudo target and merges. A failing case
// is recorded and skipped.
inline CompletionResult complete_labels(const std::vector<CompletionCase>& cases, const LabelCompletionPlan& plan,
                                        const PseudoLabeler& labeler) {
  plan.validate();
  std::map<std::string, const CasePlan*> by_id;
  for (const auto& c : plan.cases) by_id[c.case_id] = &c;
  CompletionResult res;
  for (const auto& c : cases) {
    auto it = by_id.find(c.case_id);
    if (it == by_id.end()) throw InvalidArgument("completion: case '" + c.case_id + "' is not in the plan");
    CompletedCase done{c.case_id, Mask3D(c.image.geometry()), {}};
    std::vector<Mask3D> pseudo;
    pseudo.reserve(it->second->structures.size());
    std::vector<std::tuple<Label, Provenance, const Mask3D*>> parts;
    bool failed = false;
    for (const auto& s : it->second->structures) {
      if (s.provenance == Provenance::manual) {
        auto m = c.manual.find(s.structure);
        if (m == c.manual.end()) {
          res.failures.push_back({c.case_id, s.structure, "manual label missing"});
          failed = true;
          break;
        }
        parts.emplace_back(s.structure, s.provenance, &m->second);
      } else {
        try {
          pseudo.push_back(labeler(c.image, *s.prompt));
        } catch (const Error& e) {
          res.failures.push_back({c.case_id, s.structure, e.what()});
          failed = true;
          break;
        }
        parts.emplace_back(s.structure, s.provenance, &pseudo.back());
      }
      done.provenance[s.structure] = s.provenance;
    }
    if (failed) continue;
    done.labels = merge_structures(c.image.geometry(), parts);
    res.completed.push_back(std::move(done));
  }
  return res;
}

}  // namespace crlm::pipeline
