#!/usr/bin/env python3
"""Regenerates the bundled fixtures from the readable sources below.

Mentions are written inline as [surface|C or P|ID1;ID2]. Offsets are Unicode
scalar positions, computed here without reference to the Rust splitter.
"""
import json
import os
import re

HERE = os.path.dirname(os.path.abspath(__file__))
MARK = re.compile(r"\[([^|\]]+)\|([CP])\|([^\]]*)\]")

# (doc_id, title, [sentence, ...], [(sent_index, chem surface, prot surface), ...] positive gold pairs)
CORPUS_SMALL = [
    ("PMC001", "Favipiravir targets the viral polymerase", [
        "[Favipiravir|C|MESH:C462182] inhibits the [RNA-dependent RNA polymerase|P|UniProt:P0DTD1] of SARS-CoV-2.",
        "Cells were incubated at 37.5 C.",
        "Viral load dropped approx. 3-fold after treatment.",
    ], [(0, "Favipiravir", "RNA-dependent RNA polymerase")]),
    ("PMC002", "Prodrug activation of favipiravir", [
        "[Favipiravir|C|MESH:C462182] ([T-705|C|MESH:C462182]) is a prodrug that blocks [RdRp|P|UniProt:P0DTD1] activity.",
        "In Fig. 2 of the report, [favipiravir|C|] was also compared with [Remdesivir|C|MESH:C000606551].",
    ], [(0, "Favipiravir", "RdRp"), (0, "T-705", "RdRp")]),
    ("PMC003", "Docking of favipiravir", [
        "Molecular docking suggests that [favipiravir|C|MESH:C462182] binds the [main protease|P|BERN:MPRO1] of the virus.",
        "[Favipiravir|C|MESH:C462182] did not alter [ACE2|P|HGNC:13557] expression.",
    ], [(0, "favipiravir", "main protease")]),
    ("PMC004", "Nucleoside analogues and nsp12", [
        "[Favipiravir|C|MESH:C462182] suppresses viral replication by targeting [nsp12|P|UniProt:P0DTD1].",
        "[Remdesivir|C|MESH:C000606551] also inhibits [nsp12|P|UniProt:P0DTD1] in vitro.",
    ], [(0, "Favipiravir", "nsp12"), (1, "Remdesivir", "nsp12")]),
    ("PMC005", "Enzymatic assays of favipiravir", [
        "Treatment with [favipiravir|C|] reduced [Mpro|P|BERN:MPRO1] activity in enzymatic assays (Smith et al. 2020).",
        "[Favipiravir|C|MESH:C462182] is incorporated by [RdRp|P|UniProt:P0DTD1] into nascent RNA.",
    ], [(0, "favipiravir", "Mpro"), (1, "Favipiravir", "RdRp")]),
    ("PMC006", "Remdesivir mechanism", [
        "[Remdesivir|C|MESH:C000606551] ([GS-5734|C|MESH:C000606551]) acts as a substrate of the [RNA-dependent RNA polymerase|P|UniProt:P0DTD1].",
        "Incorporation of [remdesivir|C|] stalls [RdRp|P|] after three nucleotides.",
    ], [(0, "Remdesivir", "RNA-dependent RNA polymerase"), (0, "GS-5734", "RNA-dependent RNA polymerase"),
        (1, "remdesivir", "RdRp")]),
    ("PMC007", "Examorelin as a repurposing candidate", [
        "[Examorelin|C|MESH:C080320] is predicted to bind [RdRp|P|UniProt:P0DTD1] with high affinity.",
        "[Examorelin|C|MESH:C080320] also inhibits the [main protease|P|BERN:MPRO1].",
    ], [(0, "Examorelin", "RdRp"), (1, "Examorelin", "main protease")]),
    ("PMC008", "Docking of examorelin", [
        "Docking places [examorelin|C|] in the active site of [RNA-dependent RNA polymerase|P|UniProt:P0DTD1].",
    ], [(0, "examorelin", "RNA-dependent RNA polymerase")]),
    ("PMC009", "Older antivirals", [
        "[Ribavirin|C|MESH:D012254] is a weak inhibitor of coronavirus [RdRp|P|UniProt:P0DTD1].",
        "[Sofosbuvir|C|MESH:D000069474] binds [nsp12|P|UniProt:P0DTD1] in silico!",
        "Is further validation needed?",
    ], [(0, "Ribavirin", "RdRp"), (1, "Sofosbuvir", "nsp12")]),
    ("PMC010", "Corticosteroids in severe disease", [
        "[Dexamethasone|C|MESH:D003907] reduced [IL-6|P|HGNC:6018] levels in severe patients.",
        "[Dexamethasone|C|MESH:D003907] also suppresses [IL-1beta|P|HGNC:5992] secretion.",
    ], [(0, "Dexamethasone", "IL-6"), (1, "Dexamethasone", "IL-1beta")]),
    ("PMC011", "Macrophage cytokines", [
        "[dexamethasone|C|] decreased [interleukin 6|P|HGNC:6018] production by macrophages.",
        "Release of [IL1B|P|HGNC:5992;BERN:323737602] was inhibited by [dexamethasone|C|MESH:D003907].",
    ], [(0, "dexamethasone", "interleukin 6"), (1, "dexamethasone", "IL1B")]),
    ("PMC012", "Chloroquine and receptor glycosylation", [
        "[Chloroquine|C|MESH:D002738] interferes with terminal glycosylation of [ACE2|P|HGNC:13557].",
        "[Hydroxychloroquine|C|MESH:D006886] also modulates [angiotensin-converting enzyme 2|P|HGNC:13557] glycosylation.",
    ], [(0, "Chloroquine", "ACE2"), (1, "Hydroxychloroquine", "angiotensin-converting enzyme 2")]),
    ("PMC013", "Chloroquine in mice", [
        "[chloroquine|C|] binds [ACE2|P|HGNC:13557] in docking studies, i.e. it may block entry.",
        "[Chloroquine|C|MESH:D002738] lowered [IL-6|P|HGNC:6018] in treated mice.",
    ], [(0, "chloroquine", "ACE2"), (1, "Chloroquine", "IL-6")]),
    ("PMC014", "Protease inhibitors of entry", [
        "[Camostat|C|MESH:C029750] inhibits the serine protease [TMPRSS2|P|HGNC:11876].",
    ], [(0, "Camostat", "TMPRSS2")]),
    ("PMC015", "Camostat entry assays", [
        "[camostat|C|] blocks [TMPRSS2|P|HGNC:11876] mediated entry vs. untreated controls.",
    ], [(0, "camostat", "TMPRSS2")]),
    ("PMC016", "Metabolic markers", [
        "[Glucose|C|MESH:D005947] and [insulin|P|HGNC:6081] were measured in all patients.",
        "Levels of [IL-6|P|HGNC:6018] were elevated.",
    ], []),
    ("PMC017", "Combination regimens", [
        "[Favipiravir|C|MESH:C462182] and [hydroxychloroquine|C|MESH:D006886] were given to patients with elevated [IL-6|P|HGNC:6018].",
    ], []),
    ("PMC018", "Cytokine profiling", [
        "[interleukin-1b|P|BERN:323737602] was measured by ELISA.",
        "No drug was given.",
    ], []),
    ("PMC019", "Clinical course", [
        "Patients received [Favipiravir|C|MESH:C462182] for 14 days.",
        "Adverse events were mild.",
    ], []),
    ("PMC020", "Review of antivirals", [
        "The study by J. Smith reviewed antivirals.",
        "No entities are mentioned here.",
    ], []),
]

# ChemProt-style: (pmid, title, [sentences], entities [(eid, type, sent, surface, occurrence)], relations [(cpr, eval, name, arg1, arg2)])
CHEMPROT_SMALL = [
    ("10001", "Cyclooxygenase inhibitors", [
        "Aspirin irreversibly inhibits COX-1 in platelets.",
        "Ibuprofen is a reversible inhibitor of COX-2 and COX-1.",
    ], [("T1", "CHEMICAL", 0, "Aspirin", 0), ("T2", "GENE-Y", 0, "COX-1", 0),
        ("T3", "CHEMICAL", 1, "Ibuprofen", 0), ("T4", "GENE-Y", 1, "COX-2", 0), ("T5", "GENE-N", 1, "COX-1", 0)],
     [("CPR:4", "Y", "INHIBITOR", "T1", "T2"), ("CPR:4", "Y", "INHIBITOR", "T3", "T4"),
      ("CPR:4", "Y", "INHIBITOR", "T3", "T5"), ("CPR:4", "N", "INHIBITOR", "T1", "T4")]),
    ("10002", "Metformin signalling", [
        "Metformin activates AMPK in hepatocytes.",
        "Metformin did not affect PKA activity.",
    ], [("T1", "CHEMICAL", 0, "Metformin", 0), ("T2", "GENE-Y", 0, "AMPK", 0),
        ("T3", "CHEMICAL", 1, "Metformin", 0), ("T4", "GENE-N", 1, "PKA", 0)],
     [("CPR:3", "Y", "ACTIVATOR", "T1", "T2"), ("CPR:10", "N", "NOT", "T3", "T4")]),
    ("10003", "Selective estrogen receptor modulators", [
        "Tamoxifen is an antagonist of the estrogen receptor (ER) in breast tissue.",
    ], [("T1", "CHEMICAL", 0, "Tamoxifen", 0), ("T2", "GENE-Y", 0, "estrogen receptor", 0),
        ("T3", "GENE-Y", 0, "ER", 0), ("T4", "CHEMICAL", 0, "Tamoxifen", 0)],
     [("CPR:6", "Y", "ANTAGONIST", "T1", "T2"), ("CPR:6", "Y", "ANTAGONIST", "T4", "T2"),
      ("CPR:6", "Y", "ANTAGONIST", "T1", "T3")]),
    ("10004", "Caffeine in rats", [
        "Caffeine was given to rats.",
        "Serum levels of insulin were unchanged.",
    ], [("T1", "CHEMICAL", 0, "Caffeine", 0), ("T2", "GENE-Y", 1, "insulin", 0)], []),
    ("10005", "Dopamine receptor ligands", [
        "Levels of dopamine and DRD2 expression were measured at 37.5 C.",
        "Haloperidol binds DRD2 with high affinity.",
    ], [("T1", "CHEMICAL", 0, "dopamine", 0), ("T2", "GENE-Y", 0, "DRD2", 0),
        ("T3", "CHEMICAL", 1, "Haloperidol", 0), ("T4", "GENE-Y", 1, "DRD2", 0)],
     [("CPR:6", "Y", "ANTAGONIST", "T3", "T4")]),
]


def strip_marks(sentence):
    """Returns plain text plus [(start, end, surface, etype, ids)] in sentence offsets."""
    out, spans, pos = [], [], 0
    last = 0
    for m in MARK.finditer(sentence):
        out.append(sentence[last:m.start()])
        pos += len(sentence[last:m.start()])
        surface, etype, ids = m.group(1), m.group(2), m.group(3)
        spans.append((pos, pos + len(surface), surface, etype, [i for i in ids.split(";") if i]))
        out.append(surface)
        pos += len(surface)
        last = m.end()
    out.append(sentence[last:])
    return "".join(out), spans


def corpus_small():
    d = os.path.join(HERE, "corpus_small")
    lines, gold = [], []
    for doc_id, title, sentences, positives in CORPUS_SMALL:
        plain = [strip_marks(s) for s in sentences]
        body = " ".join(p[0] for p in plain)
        lines.append(json.dumps({"kind": "doc", "doc_id": doc_id, "title": title, "body": body,
                                 "source_url": f"https://example.org/papers/{doc_id}"}, ensure_ascii=False))
        n = 0
        by_surface = {}
        chems_prots = []
        for si, (_, spans) in enumerate(plain):
            for (start, end, surface, etype, ids) in spans:
                n += 1
                mid = f"{doc_id}-m{n}"
                lines.append(json.dumps({"kind": "mention", "mention_id": mid, "doc_id": doc_id, "sent_index": si,
                                         "start": start, "end": end, "surface": surface,
                                         "etype": "Chemical" if etype == "C" else "Protein",
                                         "external_ids": ids}, ensure_ascii=False))
                by_surface[(si, surface)] = mid
                chems_prots.append((si, etype, mid))
        for (si, chem, prot) in positives:
            gold.append(f"{doc_id}\t{si}\t{by_surface[(si, chem)]}\t{by_surface[(si, prot)]}\t1")
        # every other co-sentential pair is a negative gold label
        pos_keys = {(si, by_surface[(si, c)], by_surface[(si, p)]) for (si, c, p) in positives}
        for (si, et, cm) in chems_prots:
            if et != "C":
                continue
            for (sj, et2, pm) in chems_prots:
                if et2 == "P" and sj == si and (si, cm, pm) not in pos_keys:
                    gold.append(f"{doc_id}\t{si}\t{cm}\t{pm}\t0")
    with open(os.path.join(d, "corpus.jsonl"), "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    with open(os.path.join(d, "gold.tsv"), "w", encoding="utf-8") as f:
        f.write("\n".join(gold) + "\n")


def chemprot_small():
    d = os.path.join(HERE, "chemprot_small")
    abstracts, entities, relations = [], [], []
    for pmid, title, sentences, ents, rels in CHEMPROT_SMALL:
        body = " ".join(sentences)
        abstracts.append(f"{pmid}\t{title}\t{body}")
        sent_starts, acc = [], 0
        for s in sentences:
            sent_starts.append(acc)
            acc += len(s) + 1
        seen = {}
        for (eid, etype, si, surface, occ) in ents:
            local = -1
            for _ in range(occ + 1):
                local = sentences[si].index(surface, local + 1)
            start = sent_starts[si] + local
            entities.append(f"{pmid}\t{eid}\t{etype}\t{start}\t{start + len(surface)}\t{surface}")
            seen[eid] = True
        for (cpr, ev, name, a1, a2) in rels:
            relations.append(f"{pmid}\t{cpr}\t{ev}\t{name}\tArg1:{a1}\tArg2:{a2}")
    for name, rows in (("abstracts", abstracts), ("entities", entities), ("relations", relations)):
        with open(os.path.join(d, f"chemprot_small_{name}.tsv"), "w", encoding="utf-8") as f:
            f.write("\n".join(rows) + "\n")


if __name__ == "__main__":
    corpus_small()
    chemprot_small()
