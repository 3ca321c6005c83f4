/** Keyboard shortcuts: annotation throughput requires hands on keys.
 *
 * 1..3 pick a model suggestion, s skips, j/k move between cards, / focuses
 * the slot search and n the new-slot form. Keys are ignored while typing in
 * a field; Escape leaves the field.
 */

const IGNORED_TAGS = new Set(["INPUT", "TEXTAREA", "SELECT"]);

export interface ShortcutHandlers {
  selectSuggestion(index: number): void;
  skip(): void;
  nextCard(): void;
  prevCard(): void;
  focusSearch(): void;
  focusNewSlot(): void;
}

export function attachAnnotationShortcuts(doc: Document, handlers: ShortcutHandlers): () => void {
  const onKeyDown = (event: KeyboardEvent) => {
    const target = event.target as HTMLElement | null;
    const typing = !!target && (IGNORED_TAGS.has(target.tagName) || target.isContentEditable);
    if (event.key === "Escape" && typing) {
      target?.blur();
      event.preventDefault();
      return;
    }
    if (typing) return;
    switch (event.key) {
      case "1":
      case "2":
      case "3":
        handlers.selectSuggestion(Number(event.key) - 1);
        break;
      case "s":
        handlers.skip();
        break;
      case "j":
        handlers.nextCard();
        break;
      case "k":
        handlers.prevCard();
        break;
      case "/":
        handlers.focusSearch();
        break;
      case "n":
        handlers.focusNewSlot();
        break;
      default:
        return;
    }
    event.preventDefault();
  };
  doc.addEventListener("keydown", onKeyDown);
  return () => doc.removeEventListener("keydown", onKeyDown);
}
