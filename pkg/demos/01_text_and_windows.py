"""
From raw posts to windows
=========================

Every post is tokenized once: links, mentions, numbers and stopwords go,
the rest is Porter-stemmed. Hashtags are kept separately for evaluation.
Posts are then bucketed into fixed 15-minute windows.
"""

from proactive_qe.stream import Document, WindowConfig, assign_windows
from proactive_qe.text_prep import extract_hashtags, preprocess_text

raw = "A curfew will be imposed tonight downtown #Curfew http://t.co/abc @mayor 10pm"
print("tokens:  ", preprocess_text(raw))
print("hashtags:", extract_hashtags(raw))

# three posts: two in the first quarter hour, one just after it
start = 1429315200
docs = [
    Document.from_text("a", start + 10, "Crowds gather for a peaceful march"),
    Document.from_text("b", start + 899, "Marchers chant near city hall #protest"),
    Document.from_text("c", start + 900, "Stores looted after the march #riot"),
]
for w in assign_windows(docs, WindowConfig(window_minutes=15)):
    print(f"window {w.index}: {[d.id for d in w.documents]}")
