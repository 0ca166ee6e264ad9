// Persona flow helpers: either a ready-made persona line is picked, or a
// topic template is completed with a specific item.

export function renderTopicPersona(
  template: string,
  topic: string,
  item: string,
): string {
  return template.replace("{topic}", topic).replace("{item}", item);
}

export interface PersonaChoice {
  persona: string;
  refinement: string;
}

export function validatePersonaChoice(
  picked: string | null,
  refinement: string,
): { ok: true; choice: PersonaChoice } | { ok: false; error: string } {
  if (!picked || !picked.trim()) {
    return { ok: false, error: "Pick a persona (or complete a topic) first." };
  }
  return {
    ok: true,
    choice: { persona: picked.trim(), refinement: refinement.trim() },
  };
}
