import os
import re
import shutil
from colorama import init, Fore, Style # Para cores no terminal
from src.utils import setup_logging, ensure_directory_exists
from src.main import main as cli_main, EXIT_OK, EXIT_CONFIG, EXIT_VERIFICATION
from src.reference_systems import REFERENCE_SYSTEMS, reference_names
from src.verification_suites import suite_names

# Inicializa colorama para cores no terminal
init()

def get_terminal_width():
    """Obtém a largura do terminal de forma segura."""
    try:
        width = shutil.get_terminal_size().columns
        # Garante um mínimo de 80 e máximo de 120 caracteres
        return max(80, min(width - 2, 120))
    except Exception:
        return 80

def create_border_line(char='═', width=None):
    """Cria uma linha de borda com largura responsiva."""
    if width is None:
        width = get_terminal_width()
    return char * width

def create_box_line(content, width=None, align='left'):
    """Cria uma linha dentro de uma caixa com largura responsiva."""
    if width is None:
        width = get_terminal_width()

    # Remove códigos de cor para calcular o comprimento real
    clean_content = re.sub(r'\x1b\[[0-9;]*m', '', content)
    content_length = len(clean_content)
    available_space = width - 2

    if align == 'center':
        padding_total = available_space - content_length
        padding_left = max(0, padding_total // 2)
        padding_right = max(0, padding_total - padding_left)
        return f"║{' ' * padding_left}{content}{' ' * padding_right}║"
    elif align == 'left':
        padding_right = max(0, available_space - content_length)
        return f"║{content}{' ' * padding_right}║"
    else:  # right
        padding_left = max(0, available_space - content_length)
        return f"║{' ' * padding_left}{content}║"

logger = setup_logging(verbose=False)

CONFIG_DIR = "configs"
RESULTS_DIR = "results"

def display_header():
    """Exibe o cabeçalho do programa."""
    os.system('cls' if os.name == 'nt' else 'clear')
    width = get_terminal_width()

    print(f"\n{Fore.CYAN}╔{create_border_line('═', width)}╗{Style.RESET_ALL}")
    print(f"{Fore.CYAN}{create_box_line('', width)}{Style.RESET_ALL}")
    print(f"{Fore.CYAN}{create_box_line(f'{Fore.YELLOW}LABORATÓRIO DE DIMENSÃO MÉDIA MÉTRICA{Fore.CYAN}', width, 'center')}{Style.RESET_ALL}")
    print(f"{Fore.CYAN}{create_box_line(f'{Fore.WHITE}Entropia • Pressão • Dimensão média • Medidas{Fore.CYAN}', width, 'center')}{Style.RESET_ALL}")
    print(f"{Fore.CYAN}{create_box_line('', width)}{Style.RESET_ALL}")
    print(f"{Fore.CYAN}╚{create_border_line('═', width)}╝{Style.RESET_ALL}\n")

def _menu_option(key, title, detail, width):
    print(f"{Fore.CYAN}{create_box_line(f'    {Fore.WHITE}[{key}]{Style.RESET_ALL} {Fore.CYAN}◆{Style.RESET_ALL} {title}{Fore.CYAN}', width)}{Style.RESET_ALL}")
    print(f"{Fore.CYAN}{create_box_line(f'        {Style.DIM}└─ {detail}{Fore.CYAN}', width)}{Style.RESET_ALL}")
    print(f"{Fore.CYAN}{create_box_line('', width)}{Style.RESET_ALL}")

def display_menu():
    """Apresenta o menu de opções ao utilizador."""
    display_header()
    width = get_terminal_width()

    print(f"{Fore.CYAN}╔{create_border_line('═', width)}╗{Style.RESET_ALL}")
    print(f"{Fore.CYAN}{create_box_line(f'{Fore.GREEN}MENU PRINCIPAL{Fore.CYAN}', width, 'center')}{Style.RESET_ALL}")
    print(f"{Fore.CYAN}╠{create_border_line('═', width)}╣{Style.RESET_ALL}")
    print(f"{Fore.CYAN}{create_box_line(f'  {Fore.YELLOW}▶ ESTIMAÇÃO{Fore.CYAN}', width)}{Style.RESET_ALL}")
    print(f"{Fore.CYAN}{create_box_line('', width)}{Style.RESET_ALL}")
    _menu_option('1', 'Sistema de referência', 'Entropia ou dimensão média com valor analítico conhecido', width)
    _menu_option('2', 'Configuração JSON', f'Executa uma configuração de {CONFIG_DIR}', width)
    _menu_option('3', 'Dimensão média medida-teórica', 'F̂(μ,d) ou procura da medida maximal', width)
    print(f"{Fore.CYAN}╠{create_border_line('─', width)}╣{Style.RESET_ALL}")
    print(f"{Fore.CYAN}{create_box_line(f'  {Fore.YELLOW}▶ VERIFICAÇÃO{Fore.CYAN}', width)}{Style.RESET_ALL}")
    print(f"{Fore.CYAN}{create_box_line('', width)}{Style.RESET_ALL}")
    _menu_option('4', 'Suites de verificação', 'Desigualdades exatas, oráculos e cotas das medidas', width)
    print(f"{Fore.CYAN}╠{create_border_line('─', width)}╣{Style.RESET_ALL}")
    print(f"{Fore.CYAN}{create_box_line(f'  {Fore.YELLOW}▶ SISTEMA{Fore.CYAN}', width)}{Style.RESET_ALL}")
    print(f"{Fore.CYAN}{create_box_line('', width)}{Style.RESET_ALL}")
    _menu_option('5', 'Inicializar projeto', f'Cria pastas e configurações de referência em {CONFIG_DIR}', width)
    _menu_option('0', 'Sair do programa', 'Encerra o sistema de forma segura', width)
    print(f"{Fore.CYAN}╚{create_border_line('═', width)}╝{Style.RESET_ALL}")

def select_from_list(title, options):
    """
    Pede ao utilizador que escolha um elemento de uma lista.

    Returns:
        Elemento escolhido ou None se o utilizador voltar
    """
    print(f"\n{Fore.GREEN}{title}{Style.RESET_ALL}")
    for index, option in enumerate(options, start=1):
        print(f"  [{index}] {option}")
    print("  [0] Voltar")
    while True:
        choice = input(f"\n{Fore.CYAN}❯{Style.RESET_ALL} Opção: ").strip()
        if choice == "0":
            return None
        if choice.isdigit() and 1 <= int(choice) <= len(options):
            return options[int(choice) - 1]
        print(f"{Fore.RED}Opção inválida.{Style.RESET_ALL}")

def list_configs(task_filter=None):
    """Configurações JSON disponíveis na pasta de configurações."""
    if not os.path.isdir(CONFIG_DIR):
        return []
    names = sorted(f for f in os.listdir(CONFIG_DIR) if f.endswith('.json'))
    if task_filter is None:
        return names
    return [n for n in names if n.startswith('mmdim') == (task_filter == 'f_estimate')]

def report_exit_code(code):
    """Mostra o resultado de um comando conforme o código de saída."""
    if code == EXIT_OK:
        print(f"\n{Fore.GREEN}[OK] Comando concluído com sucesso.{Style.RESET_ALL}")
    elif code == EXIT_CONFIG:
        print(f"\n{Fore.RED}[ERRO] Configuração inválida.{Style.RESET_ALL} Consulte os logs.")
    elif code == EXIT_VERIFICATION:
        print(f"\n{Fore.RED}[FALHOU] Verificação com violações.{Style.RESET_ALL} Consulte o relatório.")
    else:
        print(f"\n{Fore.YELLOW}[AVISO] Execução incompleta ou com erro (código {code}).{Style.RESET_ALL}")

def run_command(argv):
    logger.info(f"Comando: {' '.join(argv)}")
    try:
        code = cli_main(argv)
    except Exception as e:
        logger.error(f"Erro durante a execução: {e}", exc_info=True)
        print(f"\n{Fore.RED}Ocorreu um erro crítico:{Style.RESET_ALL} {str(e)}")
        code = 1
    report_exit_code(code)
    input("\nPressione Enter para continuar...")

def handle_reference():
    display_header()
    descriptions = [f"{name} - {REFERENCE_SYSTEMS[name].description}" for name in reference_names()]
    choice = select_from_list("[Sistemas de referência]", descriptions)
    if choice is None:
        return
    name = choice.split(' - ')[0]
    run_command(["estimate", "--reference", name, "--out", os.path.join(RESULTS_DIR, name)])

def handle_config(task_filter=None):
    display_header()
    configs = list_configs(task_filter)
    if not configs:
        print(f"{Fore.YELLOW}Nenhuma configuração em '{CONFIG_DIR}'.{Style.RESET_ALL} Use a opção [5] para criar as de referência.")
        input("\nPressione Enter para continuar...")
        return
    choice = select_from_list("[Configurações disponíveis]", configs)
    if choice is None:
        return
    command = "mmdim" if task_filter == 'f_estimate' else "estimate"
    out = os.path.join(RESULTS_DIR, os.path.splitext(choice)[0])
    run_command([command, "--config", os.path.join(CONFIG_DIR, choice), "--out", out])

def handle_verify():
    display_header()
    choice = select_from_list("[Suites de verificação]", suite_names() + ["all"])
    if choice is None:
        return
    run_command(["verify", "--suite", choice, "--out", os.path.join(RESULTS_DIR, "verify")])

def handle_initialize():
    display_header()
    from src.initialize import initialize_project_structure
    try:
        folders, configs = initialize_project_structure()
        print(f"{Fore.GREEN}Pastas verificadas:{Style.RESET_ALL} {', '.join(folders)}")
        print(f"{Fore.GREEN}Configurações escritas:{Style.RESET_ALL} {len(configs)}")
    except Exception as e:
        logger.error(f"Erro na inicialização: {e}", exc_info=True)
        print(f"\n{Fore.RED}Ocorreu um erro crítico:{Style.RESET_ALL} {str(e)}")
    input("\nPressione Enter para continuar...")

def main():
    """Função principal que executa o menu e interage com o utilizador."""
    logger.info("Laboratório iniciado.")
    try:
        ensure_directory_exists(RESULTS_DIR)
        while True:
            display_menu()
            choice = input(f"\n{Fore.CYAN}❯{Style.RESET_ALL} {Fore.GREEN}Digite sua opção{Style.RESET_ALL}: ").strip()
            logger.debug(f"Utilizador escolheu a opção: '{choice}'")

            if choice == '1':
                handle_reference()
            elif choice == '2':
                handle_config('estimate')
            elif choice == '3':
                handle_config('f_estimate')
            elif choice == '4':
                handle_verify()
            elif choice == '5':
                handle_initialize()
            elif choice == '0':
                logger.info("Opção '0' selecionada: Sair do programa.")
                print(f"\n{Fore.GREEN}Sessão encerrada.{Style.RESET_ALL} Até à próxima!")
                break
            else:
                logger.warning(f"Escolha inválida ('{choice}') feita pelo utilizador.")
                print(f"\n{Fore.RED}Opção '{choice}' é inválida.{Style.RESET_ALL} Por favor, escolha um número do menu.")
                input("\nPressione Enter para continuar...")
    except KeyboardInterrupt:
        logger.info("Programa interrompido pelo utilizador (Ctrl+C)")
        print(f"\n\n{Fore.YELLOW}Programa interrompido.{Style.RESET_ALL}")

if __name__ == "__main__":
    main()
