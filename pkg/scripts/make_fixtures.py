#!/usr/bin/env python3
"""Generate the bundled fixtures under data/.

Run from the repo root. The dialogue fixture is designed around hand-counted
statistics (3 dialogues, 28 utterances, 9 searches, 14 wizard turns of which
8 search, 6 searching turns with selections); the script asserts them before
writing so the committed files and the tests cannot drift apart.
"""

import random
import sys
from pathlib import Path

from sea.corpus import Document, DocumentStore
from sea.dataset import (SearchAction, SelectedSentence, Turn, WizardDialogue,
                         compute_stats, save_dataset)
from sea.text import split_sentences

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data"


def corpus_docs() -> list[Document]:
    cc = "common_crawl"
    wiki = "wikipedia"
    docs = [
        Document(
            "https://en.wikipedia.org/wiki/Rafael_Nadal", "Rafael Nadal",
            "Rafael Nadal is a Spanish professional tennis player. "
            "He has won 22 Grand Slam singles titles, with a record 14 "
            "victories at the French Open on clay. Critics regard him as the "
            "greatest clay court competitor in history. He spent 209 weeks "
            "ranked number one in the world. His rivalry with Roger Federer "
            "drew enormous audiences for two decades.", wiki),
        Document(
            "https://en.wikipedia.org/wiki/Tennis", "Tennis",
            "Tennis is a racket sport played individually against a single "
            "opponent or between two teams of two. Many fans love watching "
            "the grass court season. Points are scored when the opponent "
            "fails to return the ball. Millions of people play tennis "
            "recreationally around the world.", wiki),
        Document(
            "https://www.espn.com/tennis/news", "Tennis news wrap",
            "The tennis news wrap covers the latest tournament results. "
            "The top seed advanced to the final after winning a five set "
            "thriller. Organizers expect record attendance this year. More "
            "news follows after the doubles draw is announced.", cc),
        Document(
            "https://www.atptour.com/rankings", "Men's rankings explained",
            "The official rankings are updated every Monday during the "
            "season. Players earn ranking points at tournaments throughout "
            "the season. The race to the year end finals heats up in "
            "autumn.", cc),
        Document(
            "https://en.wikipedia.org/wiki/The_Big_Bang_Theory",
            "The Big Bang Theory",
            "The Big Bang Theory is an American television sitcom. The show "
            "follows a group of physicists and their neighbor, a waitress "
            "and aspiring actress. It ran for twelve seasons and became one "
            "of the most watched comedies on TV.", wiki),
        Document(
            "https://www.cbs.com/shows/big-bang-theory",
            "Watch The Big Bang Theory",
            "Stream every episode of the hit TV comedy online. Sheldon and "
            "Leonard are brilliant physicists who know little about "
            "everyday life. The series finale drew an enormous audience. "
            "Critics called the show a defining sitcom of its decade.", cc),
        Document(
            "https://en.wikipedia.org/wiki/Vesper_(cocktail)",
            "Vesper (cocktail)",
            "The Vesper is a cocktail made of gin, vodka, and Kina Lillet. "
            "It was invented by Ian Fleming for his fictional secret agent "
            "James Bond. Bond orders the drink shaken, not stirred, in the "
            "novel Casino Royale.", wiki),
        Document(
            "https://www.esquire.com/food-drink/james-bond-cocktails",
            "Every drink James Bond ordered",
            "James Bond has ordered many drinks across the films. The "
            "Vesper Martini remains the most famous cocktail associated "
            "with the spy. Mix three measures of gin with one of vodka and "
            "a half measure of aperitif wine. Shake it over ice and add a "
            "thin slice of lemon peel.", cc),
        Document(
            "https://www.seriouseats.com/weeknight-pasta", "Weeknight pasta",
            "People love a simple weeknight pasta. Salt the water "
            "generously and keep a cup of the starchy liquid. Finish the "
            "noodles in the sauce so every strand is coated. A show of "
            "fresh basil on top never hurts.", cc),
        Document(
            "https://www.homeground.coffee/brew-guide", "Pour over basics",
            "A pour over rewards patience and a steady hand. Grind the "
            "beans just before brewing. Many drinkers love a lighter roast "
            "for its fruit notes. Pour in slow circles and let the bed "
            "drain evenly.", cc),
        Document(
            "https://www.runnersworld.com/first-marathon",
            "Your first marathon",
            "Training for a first marathon takes about sixteen weeks. Build "
            "weekly distance slowly to avoid injury. Long runs teach the "
            "body to burn fuel efficiently. Race day weather in Chicago can "
            "swing wildly in October.", cc),
        Document(
            "https://www.discogs.com/guide/vinyl-care", "Caring for vinyl",
            "Collectors love the warm sound of vinyl records. Store sleeves "
            "upright away from sunlight. Clean the stylus before every "
            "listening session. A favorite pressing deserves an inner "
            "sleeve upgrade.", cc),
        Document(
            "https://en.wikipedia.org/wiki/Fleetwood_Mac", "Fleetwood Mac",
            "Fleetwood Mac are a British American rock band formed in "
            "London in 1967. Their album Rumours sold over forty million "
            "copies worldwide. The group cycled through several guitarists "
            "before settling on its classic lineup.", wiki),
        Document(
            "https://en.wikipedia.org/wiki/Agatha_Christie", "Agatha Christie",
            "Agatha Christie was an English writer known for her sixty six "
            "detective novels. Her books have sold more than two billion "
            "copies. She created the detectives Hercule Poirot and Miss "
            "Marple. Many of her plots show a favorite trick of hers, the "
            "unreliable narrator.", wiki),
        Document(
            "https://www.nasa.gov/artemis-updates", "Artemis program news",
            "The agency shared news about the next lunar mission. The "
            "crewed flight will loop around the Moon before returning. "
            "Engineers are watching fuel temperatures closely during the "
            "countdown rehearsal.", cc),
        Document(
            "https://www.alltrails.com/denver-hikes", "Hikes near Denver",
            "Trails near Denver range from easy lake loops to steep summit "
            "scrambles. Start early to avoid afternoon storms in summer. "
            "Dogs are welcome on most routes if leashed.", cc),
        Document(
            "https://www.justinguitar.com/beginner-course", "Guitar basics",
            "Learning to play chords takes patience and short daily "
            "practice. Start with songs that use two or three shapes. A "
            "capo lets beginners play along with a favorite record "
            "sooner.", cc),
        Document(
            "https://www.rogerebert.com/streaming-roundup",
            "What to stream this week",
            "Audiences are watching more limited series than films this "
            "season. The standout show is a quiet drama about a chess "
            "prodigy. Our favorite pick arrives on Friday with little "
            "fanfare.", cc),
        Document(
            "https://www.vogue.com/runway-report", "Runway report",
            "The runway show in Milan leaned into bold tailoring. Designers "
            "sent out sharp shoulders and long coats. Street style outside "
            "the venue stole some of the attention.", cc),
        Document(
            "https://www.goodreads.com/mystery-picks", "Mystery picks",
            "Readers looking for a new favorite mystery have plenty to "
            "choose from. This list collects locked room puzzles and slow "
            "burn thrillers. Each entry notes the detective and the "
            "setting.", cc),
        Document(
            "https://www.bonappetit.com/tomato-sauce", "A better tomato sauce",
            "Canned tomatoes make a brighter sauce than fresh ones most of "
            "the year. Simmer with a whole peeled onion and plenty of "
            "butter. Taste and salt at the end, not the start.", cc),
        Document(
            "https://www.theverge.com/laptop-buying-guide",
            "Laptop buying guide",
            "Buying a laptop means balancing weight, battery, and speed. "
            "Most people should favor battery life over raw power. Wait "
            "for seasonal sales if you can.", cc),
        Document(
            "https://www.mlb.com/scores-tonight", "Tonight's scores and news",
            "Tonight's baseball news includes two extra inning finishes. "
            "The home team rallied after a shaky start from the bullpen. "
            "Fans watching at home saw a record nine home runs.", cc),
        Document(
            "https://www.lonelyplanet.com/lisbon-guide", "Lisbon travel guide",
            "Lisbon rewards wandering without a plan. Ride the old tram "
            "through the hills at least once. The pastry shops near the "
            "river deserve the queue.", cc),
        Document(
            "https://www.chess.com/openings-primer", "Openings primer",
            "New players should learn one solid opening for each color. "
            "Understanding the ideas matters more than memorizing moves. "
            "Play long games to practice conversions.", cc),
        Document(
            "https://www.history.com/roman-roads", "Roman roads",
            "Roman roads connected the empire across three continents. "
            "Layers of gravel and stone let legions march in any weather. "
            "Some routes still carry traffic two thousand years later.",
            cc),
    ]
    return docs


def wikipedia_snapshot(docs: list[Document]) -> list[Document]:
    return [d for d in docs if d.source == "wikipedia"]


def _doc_map(docs):
    return {d.url: d for d in docs}


def dialogue_fixture(docs) -> list[WizardDialogue]:
    by_url = _doc_map(docs)

    def res(*urls):
        return tuple(Document(u, by_url[u].title, by_url[u].content, "live")
                     for u in urls)

    def sel(url, sentence_idx):
        sentence = split_sentences(by_url[url].content)[sentence_idx]
        return SelectedSentence(url, sentence)

    nadal = "https://en.wikipedia.org/wiki/Rafael_Nadal"
    tennis = "https://en.wikipedia.org/wiki/Tennis"
    espn = "https://www.espn.com/tennis/news"
    atp = "https://www.atptour.com/rankings"
    bbt = "https://en.wikipedia.org/wiki/The_Big_Bang_Theory"
    cbs = "https://www.cbs.com/shows/big-bang-theory"
    vesper = "https://en.wikipedia.org/wiki/Vesper_(cocktail)"
    esquire = "https://www.esquire.com/food-drink/james-bond-cocktails"

    d1 = WizardDialogue(
        "fixture-tennis-001",
        ("I love tennis, Rafael Nadal is my favorite player.",
         "I started playing on clay courts last summer."),
        (
            Turn("apprentice", "I have been following tennis all week, did "
                 "you catch any of the matches?"),
            Turn("wizard", "I did! Rafael Nadal is still the one to watch, "
                 "he has won 22 Grand Slam singles titles.",
                 (SearchAction("rafael nadal grand slam",
                               res(nadal, tennis, espn)),),
                 (sel(nadal, 1),)),
            Turn("apprentice", "That is incredible. Is he still best on "
                 "clay?"),
            Turn("wizard", "Absolutely, he has a record 14 French Open wins "
                 "on clay, and the top seed just advanced to another final.",
                 (SearchAction("nadal french open clay record",
                               res(nadal, atp)),
                  SearchAction("tennis finals results", res(espn, tennis))),
                 (sel(nadal, 1), sel(espn, 1))),
            Turn("apprentice", "I would love to see him live one day."),
            Turn("wizard", "Tickets for the spring clay season go quickly, "
                 "the rankings race makes every match matter.",
                 (SearchAction("tennis tournament tickets spring",
                               res(atp, tennis)),),
                 ()),
            Turn("apprentice", "How do the rankings actually work?"),
            Turn("wizard", "Players earn ranking points at tournaments "
                 "throughout the season, and the list is updated every "
                 "Monday.",
                 (SearchAction("how do tennis rankings work",
                               res(atp, espn)),),
                 (sel(atp, 1),)),
            Turn("apprentice", "Thanks, now the standings will make sense "
                 "to me."),
            Turn("wizard", "Enjoy the next tournament, maybe try a doubles "
                 "match yourself on your clay court!"),
        ),
    )

    d2 = WizardDialogue(
        "fixture-bigbang-002",
        ("My favorite TV show is The Big Bang Theory.",
         "I love Sheldon's nerdy jokes."),
        (
            Turn("wizard", "I hear you like The Big Bang Theory, the show "
                 "ran for twelve whole seasons!",
                 (SearchAction("big bang theory sitcom", res(bbt, cbs)),),
                 (sel(bbt, 2),)),
            Turn("apprentice", "Twelve seasons! I have only seen the first "
                 "three."),
            Turn("wizard", "You have a lot ahead, the finale drew an "
                 "enormous audience when it aired.",
                 (SearchAction("big bang theory finale audience",
                               res(cbs, bbt)),),
                 (sel(cbs, 2),)),
            Turn("apprentice", "Who is your favorite character?"),
            Turn("wizard", "Sheldon, easily. His roommate agreement bit "
                 "never gets old."),
            Turn("apprentice", "Mine too. Is the cast doing anything new?"),
            Turn("wizard", "A few of them are in new comedies now, critics "
                 "called the original a defining sitcom of its decade.",
                 (SearchAction("big bang theory cast new shows",
                               res(cbs, bbt)),),
                 ()),
            Turn("apprentice", "I will look for those once I finish the "
                 "series."),
            Turn("wizard", "Pace yourself, the middle seasons are the "
                 "strongest in my opinion."),
            Turn("apprentice", "Noted, thanks for the tips!"),
        ),
    )

    d3 = WizardDialogue(
        "fixture-bond-003",
        ("I am a huge fan of James Bond movies.",),
        (
            Turn("apprentice", "I rewatched Casino Royale last night, that "
                 "opening never gets old."),
            Turn("wizard", "Great choice! Did you know the Vesper cocktail "
                 "was invented by Ian Fleming for James Bond?",
                 (SearchAction("james bond vesper cocktail",
                               res(vesper, esquire)),),
                 (sel(vesper, 1),)),
            Turn("apprentice", "I did not! What is actually in it?"),
            Turn("wizard", "Gin, vodka, and Kina Lillet, shaken of course, "
                 "not stirred."),
            Turn("apprentice", "Maybe I will mix one for the next movie "
                 "night."),
            Turn("wizard", "Add a thin slice of lemon peel and you are set."),
            Turn("apprentice", "Which film should I queue up after this "
                 "one?"),
            Turn("wizard", "Skyfall pairs well with a Vesper, in my view."),
        ),
    )
    return [d1, d2, d3]


def eval_fixture(seed: int = 7) -> list[WizardDialogue]:
    """Ten dialogues, 50 wizard turns, one search and selection each.

    Responses echo the apprentice's phrasing and only brush the knowledge
    sentence, so knowledge-copying scores high KF1 / low F1 while context
    echoing does the reverse.
    """
    rng = random.Random(seed)
    entities = [
        ("rafael nadal", "tennis"), ("fleetwood mac", "music"),
        ("agatha christie", "books"), ("casino royale", "movies"),
        ("artemis program", "space"), ("tomato sauce", "cooking"),
        ("vinyl records", "collecting"), ("chess openings", "games"),
        ("roman roads", "history"), ("pour over coffee", "coffee"),
        ("marathon training", "running"), ("lisbon trams", "travel"),
    ]
    facts = [
        "celebrated by devoted followers across fifty countries",
        "documented in a sprawling archive of rare interviews",
        "studied by researchers tracking decades of records",
        "featured in museum exhibits alongside original artifacts",
        "ranked among the most influential subjects of its era",
        "preserved through painstaking restoration projects",
    ]
    extras = [
        "its anniversary drew widespread commemorations in 2019",
        "an acclaimed documentary premiered about it in 2021",
        "collectors paid record sums for memorabilia in 2017",
        "a touring exhibition visited twelve cities in 2023",
    ]
    dialogues = []
    for d_idx in range(10):
        turns: list[Turn] = []
        entity, topic = entities[d_idx % len(entities)]
        persona = (f"I am fascinated by {topic}.",
                   f"My favorite subject is {entity}.")
        for t_idx in range(5):
            entity, topic = rng.choice(entities)
            fact = rng.choice(facts)
            extra = rng.choice(extras)
            knowledge = (f"{entity.title()} is {fact} and {extra}, according "
                         f"to archivists.")
            url = (f"https://reference.example.org/{entity.replace(' ', '-')}"
                   f"/{d_idx}-{t_idx}")
            doc = Document(url, f"Notes on {entity}",
                           f"Background reading. {knowledge} Further "
                           f"details appear in the appendix.", "live")
            apprentice = f"What do you know about {entity} and {topic}?"
            wizard = (f"I know a bit about {entity} and {topic}, they are "
                      f"quite remarkable these days honestly.")
            turns.append(Turn("apprentice", apprentice))
            turns.append(Turn(
                "wizard", wizard,
                (SearchAction(f"{entity} {topic}", (doc,)),),
                (SelectedSentence(url, knowledge),),
            ))
        dialogues.append(WizardDialogue(
            f"eval-fixture-{d_idx:03d}", persona, tuple(turns)))
    return dialogues


def main() -> int:
    DATA.mkdir(exist_ok=True)
    docs = corpus_docs()
    store = DocumentStore()
    for doc in docs:
        store.add(doc)
    store.save(DATA / "fixture_corpus.jsonl")
    wiki_store = DocumentStore()
    for doc in wikipedia_snapshot(docs):
        wiki_store.add(doc)
    wiki_store.save(DATA / "fixture_wikipedia.jsonl")

    dialogues = dialogue_fixture(docs)
    stats = compute_stats(dialogues)
    expected = {
        "n_dialogues": 3, "n_utterances": 28, "n_searches": 9,
        "n_unique_selected_urls": 6, "n_unique_selected_domains": 4,
    }
    actual = {k: getattr(stats, k) for k in expected}
    assert actual == expected, f"fixture drifted: {actual} != {expected}"
    save_dataset(dialogues, DATA / "fixture_dialogues.jsonl")

    evals = eval_fixture()
    n_wizard = sum(1 for d in evals for t in d.turns if t.speaker == "wizard")
    assert n_wizard == 50, n_wizard
    save_dataset(evals, DATA / "fixture_eval.jsonl")

    print(f"wrote {len(docs)} corpus docs, {len(wiki_store)} wikipedia docs, "
          f"{len(dialogues)} fixture dialogues, {len(evals)} eval dialogues")
    return 0


if __name__ == "__main__":
    sys.exit(main())
