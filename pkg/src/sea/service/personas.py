"""Static persona options offered to apprentices.

A fixed stand-in for the original persona mining: a pool of searchable
persona lines plus topic templates the user completes with a specific item.
"""

PERSONA_POOL = [
    "I love tennis, Rafael Nadal is my favorite player.",
    "My favorite TV show is The Big Bang Theory.",
    "I am a huge fan of James Bond movies.",
    "I love cooking Italian food at home.",
    "I collect vinyl records of 1970s rock bands.",
    "I am learning to play the electric guitar.",
    "I enjoy hiking in national parks near Denver.",
    "My favorite author is Agatha Christie.",
    "I follow space exploration news closely.",
    "I am training for my first marathon in Chicago.",
    "I love trying specialty coffee from different countries.",
    "My favorite band is Fleetwood Mac.",
]

TOPIC_AREAS = [
    "fashion brand",
    "book",
    "music artist",
    "movie or TV show",
    "sports team or athlete",
    "hobby or game",
    "item to buy",
]

TOPIC_TEMPLATE = "My character's favorite {topic} is {item}."


def render_topic_persona(topic: str, item: str) -> str:
    return TOPIC_TEMPLATE.format(topic=topic, item=item)
